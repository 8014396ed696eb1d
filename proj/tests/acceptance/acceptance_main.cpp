// Acceptance suite: one PASS/FAIL/SKIP line per criterion, non-zero exit on
// any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "blockpred/errors.hpp"
#include "blockpred/evaluation.hpp"
#include "blockpred/features.hpp"
#include "blockpred/rng.hpp"
#include "blockpred/synthsim.hpp"
#include "blockpred/training.hpp"
#include "blockpred/windowing.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

namespace bp = blockpred;
namespace bt = blockpred::testing;
using Clock = std::chrono::steady_clock;

namespace {

enum class Outcome { pass, fail, skip };

struct Result {
  Outcome outcome = Outcome::fail;
  std::string detail;
};

Result verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<bp::LinkStatus> random_stream(bp::Rng& rng, std::size_t n, double p_blocked) {
  std::vector<bp::LinkStatus> out(n);
  for (auto& s : out) s = rng.bernoulli(p_blocked) ? bp::LinkStatus::blocked : bp::LinkStatus::los;
  return out;
}

// 1 ------------------------------------------------------------------------
Result labeling_oracle() {
  const auto t0 = Clock::now();
  bp::Rng rng(101);
  std::size_t mismatches = 0, compared = 0;
  for (int s = 0; s < 1000; ++s) {
    const auto stream = random_stream(rng, 1 + rng.index(200), rng.uniform(0.05, 0.6));
    std::vector<int> ints;
    for (auto v : stream) ints.push_back(bp::to_int(v));
    for (int r : {2, 8}) {
      for (int rp = 1; rp <= 10; ++rp) {
        for (int stride : {1, 3}) {
          const bp::WindowConfig cfg{r, rp, stride};
          const auto ref = bt::naive_windows(ints, r, rp, stride);
          std::vector<bp::SequenceSample> got;
          if (stream.size() >= static_cast<std::size_t>(r + rp)) {
            got = bp::build_windows(stream, "s", cfg);
          }
          ++compared;
          bool same = got.size() == ref.size() && bp::window_count(stream.size(), cfg) == ref.size();
          for (std::size_t i = 0; same && i < ref.size(); ++i) {
            same = got[i].anchor_index == ref[i].anchor && bp::to_int(got[i].label) == ref[i].label &&
                   got[i].r == r && got[i].r_prime == rp;
          }
          mismatches += !same;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return verdict(mismatches == 0 && secs < 30.0,
                 std::to_string(compared) + " configurations, " + std::to_string(mismatches) + " mismatches, " +
                     fmt(secs, 1) + " s");
}

// 2 ------------------------------------------------------------------------
Result split_balance_exactness() {
  bp::Rng rng(202);
  std::size_t failures = 0;
  std::string first_failure;
  auto fail = [&](const std::string& why) {
    if (failures++ == 0) first_failure = why;
  };
  for (int d = 0; d < 500; ++d) {
    auto stream = random_stream(rng, 20 + rng.index(400), rng.uniform(0.05, 0.7));
    stream[stream.size() - 1] = bp::LinkStatus::blocked;
    stream[stream.size() - 2] = bp::LinkStatus::los;
    const bp::WindowConfig cfg{static_cast<int>(1 + rng.index(8)), 1, 1};
    const auto windows = bp::build_windows(stream, "s", cfg);
    std::size_t pos = 0;
    for (const auto& w : windows) pos += w.label == bp::LinkStatus::blocked;
    if (pos == 0 || pos == windows.size()) continue;
    const std::uint64_t seed = rng.next_u64();

    const auto balanced = bp::balance(windows, seed);
    std::size_t bpos = 0;
    for (const auto& w : balanced) bpos += w.label == bp::LinkStatus::blocked;
    const std::size_t bneg = balanced.size() - bpos;
    if ((bpos > bneg ? bpos - bneg : bneg - bpos) > 1) fail("balance gap > 1 in dataset " + std::to_string(d));
    if (!std::is_sorted(balanced.begin(), balanced.end(),
                        [](const auto& a, const auto& b) { return a.anchor_index < b.anchor_index; })) {
      fail("balance reordered survivors in dataset " + std::to_string(d));
    }

    const auto sp = bp::split(balanced, bp::kDefaultSplitFractions, seed);
    const std::size_t v = balanced.size();
    // Exact floors of 0.7V and 0.9V; 0.7 * V in floating point can land just below an integer.
    const std::size_t a = 7 * v / 10, b = 9 * v / 10;
    if (sp.train.size() != a || sp.val.size() != b - a || sp.test.size() != v - b) {
      fail("split sizes wrong for V=" + std::to_string(v));
    }
    std::multiset<std::int64_t> all;
    for (const auto* part : {&sp.train, &sp.val, &sp.test}) {
      for (const auto& w : *part) all.insert(w.anchor_index);
    }
    std::multiset<std::int64_t> expected;
    for (const auto& w : balanced) expected.insert(w.anchor_index);
    if (all != expected) fail("splits not disjoint/exhaustive in dataset " + std::to_string(d));

    std::ostringstream l1, l2;
    bp::write_listing(sp, l1);
    bp::write_listing(bp::split(bp::balance(windows, seed), bp::kDefaultSplitFractions, seed), l2);
    if (l1.str() != l2.str()) fail("re-run not byte-identical in dataset " + std::to_string(d));
  }
  return verdict(failures == 0, failures == 0 ? "500 datasets: gap <= 1, exact cut sizes, disjoint, reproducible"
                                              : std::to_string(failures) + " failures; first: " + first_failure);
}

// 3 ------------------------------------------------------------------------
Result feature_contract() {
  bp::Rng rng(303);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const int z = 4 * static_cast<int>(1 + rng.index(10));
    bp::DetectionResult det;
    const auto y = rng.index(21);
    for (std::uint64_t k = 0; k < y; ++k) {
      const double x1 = rng.uniform01(), y1 = rng.uniform01();
      const double conf = rng.bernoulli(0.3) ? 0.9 : rng.uniform(0.5, 1.0);  // force some ties
      det.boxes.push_back({x1, y1, rng.uniform(x1, 1.0), rng.uniform(y1, 1.0), 2, conf});
    }
    const auto fv = bp::features_from_detections(det, z);
    bool ok = fv.values.size() == static_cast<std::size_t>(z) &&
              fv.n_active == 4 * std::min<std::size_t>(y, static_cast<std::size_t>(z / 4));
    for (std::size_t k = 0; ok && k < fv.values.size(); ++k) {
      ok = fv.values[k] >= 0.0 && fv.values[k] <= 1.0 && (k < fv.n_active || fv.values[k] == 0.0);
    }
    ok = ok && fv.values == bt::naive_features(det.boxes, z);
    failures += !ok;
  }
  return verdict(failures == 0, "10000 fuzzed detection sets, " + std::to_string(failures) + " violations");
}

// 4 ------------------------------------------------------------------------
Result gradient_check() {
  bp::ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_dim = 3;
  cfg.num_layers = 2;
  cfg.seq_len = 2;
  using Model = bp::GruClassifier<double>;
  bp::Rng rng(404);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    Model model(cfg);
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i) model.parameters()[i] = rng.uniform(-1, 1);
    std::vector<Model::Matrix> xs;
    for (int t = 0; t < cfg.seq_len; ++t) {
      Model::Matrix x(cfg.input_dim, 6);
      for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform01();
      xs.push_back(x);
    }
    std::vector<int> labels(6);
    for (auto& l : labels) l = static_cast<int>(rng.index(2));
    Model::Vector grad;
    model.loss_and_gradient(xs, labels, grad);
    const auto fd = bt::finite_difference_gradient(
        [&](const Eigen::VectorXd& p) {
          Model probe(cfg);
          probe.parameters() = p;
          return probe.loss(xs, labels);
        },
        model.parameters(), 1e-4);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      // Relative error, with an absolute floor for entries that are numerically zero.
      const double denom = std::max({std::abs(grad[i]), std::abs(fd[i]), 1e-6});
      worst = std::max(worst, std::abs(grad[i] - fd[i]) / denom);
    }
  }
  return verdict(worst < 1e-3, "max relative error " + std::to_string(worst) + " over 20 draws");
}

// 5, 6 ------------------------------------------------------------------------
struct SyntheticRun {
  double test_acc = 0.0;
  double test_f1 = 0.0;
  int best_epoch = 0;
  double seconds = 0.0;
};

class SyntheticBench {
 public:
  SyntheticBench() {
    bp::SceneConfig scene;
    scene.duration_s = 20 * 60;
    scene.sample_rate_hz = 10;
    scene.seed = 7;
    sim_ = bp::simulate(scene);
    truth_.add(sim_);
  }

  SyntheticRun run(int r_prime, const bp::DetectionNoise* noise) {
    const auto t0 = Clock::now();
    bp::OracleDetector oracle(truth_);
    std::unique_ptr<bp::NoisyDetector> noisy;
    if (noise != nullptr) noisy = std::make_unique<bp::NoisyDetector>(truth_, *noise, 11);
    bp::DetectorBackend& det = noisy ? static_cast<bp::DetectorBackend&>(*noisy) : oracle;
    bp::DetectorOptions opts;
    opts.min_confidence = 0.0;
    bp::FeaturePipeline pipe(det, {bp::EnhancementConfig{}, opts, 28});
    const bp::SequenceFeatureFn features = [&](const bp::SequenceSample& s) {
      const auto seq = pipe.sequence_features(sim_.scenario, s);
      Eigen::MatrixXd m(28, s.r);
      for (int t = 0; t < s.r; ++t) {
        m.col(t) = Eigen::Map<const Eigen::VectorXd>(seq[static_cast<std::size_t>(t)].values.data(), 28);
      }
      return m;
    };

    const bp::WindowConfig wc{8, r_prime, 1};
    const auto sp = bp::split(bp::balance(bp::build_windows(sim_.scenario, wc), 1), bp::kDefaultSplitFractions, 2);
    const auto tr = bp::build_sequence_dataset(sp.train, features);
    const auto va = bp::build_sequence_dataset(sp.val, features);
    const auto te = bp::build_sequence_dataset(sp.test, features);

    bp::ModelConfig mc;  // Z = 28, H = 128, 2 layers, r = 8
    bp::TrainConfig tc;  // lr 1e-3, batch 128, 100 epochs
    tc.seed = 3;
    const auto res = bp::train(tr, va, mc, tc);
    const auto preds = bp::predict(res.checkpoint, te);
    std::vector<int> p;
    for (const auto& x : preds) p.push_back(x.label);
    const auto rep = bp::make_report("synthetic", r_prime, p, te.labels);
    return {rep.top1_accuracy, rep.f1, res.best_epoch, seconds_since(t0)};
  }

 private:
  bp::SimScenario sim_;
  bp::GroundTruthStore truth_;
};

std::string describe(const SyntheticRun& r) {
  return "acc " + fmt(r.test_acc) + " F1 " + fmt(r.test_f1) + " (best epoch " + std::to_string(r.best_epoch) +
         ", " + fmt(r.seconds, 0) + " s)";
}

// 7 ------------------------------------------------------------------------
Result metric_correctness() {
  bp::Rng rng(707);
  std::size_t failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(500);
    const double pp = rng.uniform01(), pt = rng.uniform01();
    std::vector<int> p(n), t(n);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = rng.bernoulli(pp);
      t[k] = rng.bernoulli(pt);
    }
    const auto cm = bp::confusion(p, t);
    std::size_t correct = 0, pred_pos = 0, true_pos = 0, hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
      correct += p[k] == t[k];
      pred_pos += p[k] == 1;
      true_pos += t[k] == 1;
      hits += p[k] == 1 && t[k] == 1;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(n);
    const double prec = pred_pos ? static_cast<double>(hits) / static_cast<double>(pred_pos) : 0.0;
    const double rec = true_pos ? static_cast<double>(hits) / static_cast<double>(true_pos) : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    bool ok = std::abs(bp::accuracy(cm) - acc) <= 1e-12 && std::abs(bp::precision(cm) - prec) <= 1e-12 &&
              std::abs(bp::recall(cm) - rec) <= 1e-12 && std::abs(bp::f1(cm) - f) <= 1e-12;
    ok = ok && bp::top1_accuracy(p, t) == acc && cm.total() == n;
    failures += !ok;
  }
  return verdict(failures == 0, "1000 random pairs, " + std::to_string(failures) + " mismatches");
}

// 8 ------------------------------------------------------------------------
Result real_data() {
  const char* config = std::getenv("BLOCKPRED_REAL_DATA_CONFIG");
  if (config == nullptr || *config == '\0') {
    return {Outcome::skip, "set BLOCKPRED_REAL_DATA_CONFIG to a run config with the real scenarios and backends"};
  }
  for (const char* cmd : {"build-dataset", "extract-features", "sweep"}) {
    const int code = bp::cli::run_cli({cmd, "--config", config});
    if (code != 0) return {Outcome::fail, std::string(cmd) + " exited with " + std::to_string(code)};
  }
  const auto cfg = bp::cli::resolve_config({config, {}, {}, {}, {}, {}, {}});
  const auto reports =
      bp::reports_from_json_text(bt::read_file(cfg.output_dir() / "report" / "report.json"));
  const bp::MetricsReport *one = nullptr, *ten = nullptr;
  for (const auto& r : reports) {
    if (r.scope != "combined") continue;
    if (r.r_prime == 1) one = &r;
    if (r.r_prime == 10) ten = &r;
  }
  if (one == nullptr || ten == nullptr) return {Outcome::fail, "report lacks combined r'=1 or r'=10"};
  const bool ok = std::abs(one->f1 - 0.90) <= 0.05 && std::abs(ten->top1_accuracy - 0.80) <= 0.05 &&
                  std::abs(one->precision - 0.96) <= 0.05;
  return verdict(ok, "r'=1 F1 " + fmt(one->f1) + " precision " + fmt(one->precision) + ", r'=10 acc " +
                         fmt(ten->top1_accuracy));
}

// 9 ------------------------------------------------------------------------
Result determinism() {
  const char* config = R"({
    "seed": 17,
    "sweep": [1, 5, 10],
    "train": {"epochs": 5},
    "simulation": [
      {"scenario_id": "street", "duration_s": 90},
      {"scenario_id": "dusk", "duration_s": 90, "night_fraction": 0.5, "object_rate": 0.4}
    ]
  })";
  std::string reports[2];
  for (auto& report : reports) {
    bt::ScratchDir dir("bp-accept");
    bt::write_file(dir / "run.json", config);
    for (const char* cmd : {"simulate", "build-dataset", "extract-features", "sweep"}) {
      const int code = bp::cli::run_cli(
          {cmd, "--config", (dir / "run.json").string(), "--out", (dir / "out").string()});
      if (code != 0) return {Outcome::fail, std::string(cmd) + " exited with " + std::to_string(code)};
    }
    report = bt::read_file(dir / "out" / "report" / "report.json");
  }
  return verdict(!reports[0].empty() && reports[0] == reports[1],
                 "two pipeline runs, report.json " + std::string(reports[0] == reports[1] ? "identical" : "differs") +
                     " (" + std::to_string(reports[0].size()) + " bytes)");
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, const Result& r) {
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::skip ? "SKIP" : "FAIL";
    failed += r.outcome == Outcome::fail;
    std::cout << tag << "  #" << id << " " << name << ": " << r.detail << std::endl;
  };
  auto guarded = [](const std::function<Result()>& fn) -> Result {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {Outcome::fail, std::string("exception: ") + e.what()};
    }
  };

  report(1, "labeling oracle equivalence", guarded(labeling_oracle));
  report(2, "split/balance exactness", guarded(split_balance_exactness));
  report(3, "feature-vector contract", guarded(feature_contract));
  report(4, "gradient check", guarded(gradient_check));

  std::optional<SyntheticBench> bench;
  std::optional<SyntheticRun> noisy1;
  const bp::DetectionNoise noise{0.01, 0.1, 0.0};
  report(5, "synthetic end-to-end learning", guarded([&] {
           const auto t0 = Clock::now();
           bench.emplace();
           const auto oracle = bench->run(1, nullptr);
           noisy1 = bench->run(1, &noise);
           const double secs = seconds_since(t0);
           return verdict(oracle.test_f1 >= 0.95 && noisy1->test_f1 >= 0.85 && secs < 15 * 60,
                          "oracle " + describe(oracle) + "; noisy " + describe(*noisy1) + "; total " +
                              fmt(secs, 0) + " s");
         }));
  report(6, "sweep trend", guarded([&] {
           if (!bench) bench.emplace();
           if (!noisy1) noisy1 = bench->run(1, &noise);
           const auto five = bench->run(5, &noise);
           const auto ten = bench->run(10, &noise);
           return verdict(noisy1->test_acc >= ten.test_acc && ten.test_f1 >= 0.70,
                          "r'=1 " + describe(*noisy1) + "; r'=5 " + describe(five) + "; r'=10 " + describe(ten));
         }));
  report(7, "metric correctness", guarded(metric_correctness));
  report(8, "real-data headline numbers", guarded(real_data));
  report(9, "pipeline determinism", guarded(determinism));

  std::cout << (failed == 0 ? "acceptance: all criteria met" : "acceptance: " + std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
