#include "blockpred/evaluation.hpp"

#include <set>

#include "blockpred/errors.hpp"
#include "blockpred/plots.hpp"
#include "blockpred/training.hpp"

namespace blockpred {
namespace {

void check_lengths(std::span<const int> preds, std::span<const int> truths) {
  if (preds.size() != truths.size()) {
    throw LengthError("predictions (" + std::to_string(preds.size()) + ") and truths (" +
                      std::to_string(truths.size()) + ") differ in length");
  }
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double top1_accuracy(std::span<const int> preds, std::span<const int> truths) {
  check_lengths(preds, truths);
  if (preds.empty()) throw EmptyError("top-1 accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t u = 0; u < preds.size(); ++u) hits += preds[u] == truths[u] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths) {
  check_lengths(preds, truths);
  ConfusionMatrix cm;
  for (std::size_t u = 0; u < preds.size(); ++u) {
    const int p = preds[u], t = truths[u];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw ValidationError("confusion matrix inputs must be 0/1");
    }
    if (t == 1) {
      (p == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (p == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

double f1(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp);
  return safe_ratio(2.0 * tp, 2.0 * tp + static_cast<double>(cm.fp) + static_cast<double>(cm.fn));
}

double precision(const ConfusionMatrix& cm) {
  return safe_ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
}

double recall(const ConfusionMatrix& cm) {
  return safe_ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
}

double accuracy(const ConfusionMatrix& cm) {
  return safe_ratio(static_cast<double>(cm.tp + cm.tn), static_cast<double>(cm.total()));
}

MetricsReport make_report(std::string scope, int r_prime, std::span<const int> preds,
                          std::span<const int> truths) {
  MetricsReport r;
  r.scope = std::move(scope);
  r.r_prime = r_prime;
  r.confusion = confusion(preds, truths);
  r.top1_accuracy = top1_accuracy(preds, truths);
  r.f1 = f1(r.confusion);
  r.precision = precision(r.confusion);
  r.recall = recall(r.confusion);
  r.support = r.confusion.total();
  return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["scope"] = r.scope;
  j["r_prime"] = r.r_prime;
  j["top1_accuracy"] = r.top1_accuracy;
  j["f1"] = r.f1;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["confusion"] = {{"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn},
                    {"tp", r.confusion.tp}};
  j["U"] = r.support;
  return j;
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.scope = j.at("scope").get<std::string>();
    r.r_prime = j.at("r_prime").get<int>();
    r.top1_accuracy = j.at("top1_accuracy").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tn").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                   c.at("fn").get<std::uint64_t>(), c.at("tp").get<std::uint64_t>()};
    r.support = j.at("U").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad metrics report: ") + e.what());
  }
  return r;
}

std::string reports_to_json_text(const std::vector<MetricsReport>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

std::vector<MetricsReport> reports_from_json_text(const std::string& text) {
  std::vector<MetricsReport> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw ParseError("report.json must hold an array");
    for (const auto& item : j) out.push_back(metrics_report_from_json(item));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad report.json: ") + e.what());
  }
  return out;
}

SweepEvaluation evaluate_sweep(const std::map<int, Checkpoint>& checkpoints,
                               const std::map<int, DatasetSplit>& splits,
                               const SequenceFeatureFn& features,
                               const std::filesystem::path* plot_dir) {
  SweepEvaluation out;
  for (const auto& [r_prime, ckpt] : checkpoints) {
    const auto it = splits.find(r_prime);
    if (it == splits.end()) {
      throw MissingSplitError("no dataset split for r'=" + std::to_string(r_prime));
    }
    const auto& test = it->second.test;
    if (test.empty()) throw MissingSplitError("empty test split for r'=" + std::to_string(r_prime));

    const auto data = build_sequence_dataset(test, features);
    const auto preds = predict(ckpt, data);

    std::set<std::string> scopes;
    for (const auto& s : test) scopes.insert(s.scenario_id);
    for (const auto& scope : scopes) {
      std::vector<int> p, t;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (test[i].scenario_id != scope) continue;
        p.push_back(preds[i].label);
        t.push_back(to_int(test[i].label));
      }
      out.reports.push_back(make_report(scope, r_prime, p, t));
    }
    std::vector<int> p(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) p[i] = preds[i].label;
    out.reports.push_back(make_report("combined", r_prime, p, data.labels));
  }
  if (plot_dir != nullptr) out.plots = write_report_plots(out.reports, *plot_dir);
  return out;
}

}  // namespace blockpred
