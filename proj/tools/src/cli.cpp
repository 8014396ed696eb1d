#include "cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "blockpred/checkpoint.hpp"
#include "blockpred/coredata.hpp"
#include "blockpred/evaluation.hpp"
#include "blockpred/features.hpp"
#include "blockpred/plots.hpp"
#include "blockpred/synthsim.hpp"
#include "blockpred/training.hpp"
#include "blockpred/windowing.hpp"

namespace blockpred::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::backend: return kExitBackend;
    case ErrorKind::missing_prerequisite: return kExitMissingPrerequisite;
    default: return kExitConfig;
  }
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

/// Exclusive claim on an output directory for the lifetime of a command.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".blockpred.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw ConfigError("output directory " + dir.string() +
                          " is locked by another blockpred run (delete " + path_.string() +
                          " if no run is active)");
      }
      throw IoError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

fs::path listing_path(const RunConfig& cfg, int r_prime) {
  return cfg.output_dir() / "datasets" / ("listing_rp" + std::to_string(r_prime) + ".jsonl");
}

fs::path model_path(const RunConfig& cfg, int r_prime) {
  return cfg.output_dir() / "models" /
         ("model_" + cfg.scope() + "_rp" + std::to_string(r_prime) + ".ckpt");
}

fs::path train_log_path(const RunConfig& cfg, int r_prime) {
  return cfg.output_dir() / "models" /
         ("train_log_" + cfg.scope() + "_rp" + std::to_string(r_prime) + ".csv");
}

fs::path report_dir(const RunConfig& cfg) {
  return cfg.scenario ? cfg.output_dir() / "report" / *cfg.scenario : cfg.output_dir() / "report";
}

void write_resolved_config(const RunConfig& cfg, const std::string& command) {
  write_file(cfg.output_dir() / ("config." + command + ".json"), to_json(cfg).dump(2) + "\n");
}

struct LoadedScenarios {
  std::vector<fs::path> manifests;  // parallel to `scenarios`
  std::vector<Scenario> scenarios;

  const Scenario& get(const std::string& id) const {
    for (const auto& s : scenarios) {
      if (s.scenario_id == id) return s;
    }
    throw ConfigError("listing references unknown scenario '" + id + "'");
  }
};

LoadedScenarios load_scenarios(const RunConfig& cfg) {
  LoadedScenarios out;
  for (const auto& path : cfg.manifest_paths()) {
    if (!fs::exists(path)) {
      if (cfg.manifests.empty()) {
        throw MissingPrerequisiteError("manifest not found: " + path.string() +
                                       "; run `blockpred simulate` first");
      }
      throw ConfigError("manifest not found: " + path.string());
    }
    Scenario sc = load_manifest(path);
    if (cfg.scenario && sc.scenario_id != *cfg.scenario) continue;
    for (const auto& prev : out.scenarios) {
      if (prev.scenario_id == sc.scenario_id) {
        throw ConfigError("duplicate scenario id '" + sc.scenario_id + "' in " + path.string());
      }
    }
    out.manifests.push_back(path);
    out.scenarios.push_back(std::move(sc));
  }
  if (out.scenarios.empty()) {
    throw ConfigError(cfg.scenario ? "no manifest holds scenario '" + *cfg.scenario + "'"
                                   : std::string("no manifests configured"));
  }
  return out;
}

DatasetSplit read_listing_file(const RunConfig& cfg, int r_prime) {
  const auto path = listing_path(cfg, r_prime);
  std::ifstream in(path);
  if (!in) {
    throw MissingPrerequisiteError("no dataset listing for r'=" + std::to_string(r_prime) + " at " +
                                   path.string() + "; run `blockpred build-dataset` first");
  }
  DatasetSplit split = read_listing(in, path.string());
  if (cfg.scenario) {
    const auto keep = [&](std::vector<SequenceSample>& v) {
      std::erase_if(v, [&](const SequenceSample& s) { return s.scenario_id != *cfg.scenario; });
    };
    keep(split.train);
    keep(split.val);
    keep(split.test);
    if (split.size() == 0) {
      throw MissingPrerequisiteError("listing " + path.string() + " has no sequences of scenario '" +
                                     *cfg.scenario + "'; rebuild the dataset");
    }
  }
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto& s : *part) {
      if (s.r != cfg.window.r) {
        throw ConfigMismatchError("listing " + path.string() + " was built with r=" +
                                  std::to_string(s.r) + " but the config has r=" +
                                  std::to_string(cfg.window.r) + "; rebuild the dataset");
      }
    }
  }
  return split;
}

/// Detector, enhancer and feature cache for one run.
struct FeatureStage {
  GroundTruthStore truth;
  std::unique_ptr<DetectorBackend> detector;
  std::unique_ptr<EnhancerBackend> enhancer;
  FeatureCache cache;
  fs::path cache_file;
  std::unique_ptr<FeaturePipeline> pipeline;

  FeatureStage(const RunConfig& cfg, const LoadedScenarios& loaded) {
    const auto timeout = [](const BackendEndpoint& e) { return std::chrono::milliseconds(e.timeout_ms); };
    switch (cfg.detector.kind) {
      case DetectorKind::oracle:
      case DetectorKind::noisy:
        for (std::size_t i = 0; i < loaded.manifests.size(); ++i) {
          const auto gt = loaded.manifests[i].parent_path() / "ground_truth.jsonl";
          if (!fs::exists(gt)) {
            throw ConfigError("detector '" + to_string(cfg.detector.kind) + "' needs " + gt.string() +
                              " (written by `blockpred simulate`); use --detector external for "
                              "recorded data");
          }
          truth.load_jsonl(gt);
        }
        if (cfg.detector.kind == DetectorKind::oracle) {
          detector = std::make_unique<OracleDetector>(truth);
        } else {
          detector = std::make_unique<NoisyDetector>(truth, cfg.detector.noise, cfg.noise_seed());
        }
        break;
      case DetectorKind::external:
        if (!cfg.detector.backend.url.empty()) {
          detector = std::make_unique<HttpDetector>(cfg.detector.backend.url, timeout(cfg.detector.backend));
        } else {
          detector = std::make_unique<SubprocessDetector>(cfg.detector.backend.command,
                                                          timeout(cfg.detector.backend));
        }
        break;
    }
    if (cfg.enhancement.mode == EnhanceMode::external) {
      if (!cfg.enhancer.url.empty()) {
        enhancer = std::make_unique<HttpEnhancer>(cfg.enhancer.url, timeout(cfg.enhancer));
      } else {
        enhancer = std::make_unique<SubprocessEnhancer>(cfg.enhancer.command, timeout(cfg.enhancer));
      }
    }
    cache_file = cfg.cache_path() / "features.csv";
    cache.load(cache_file);
    PipelineConfig pc{cfg.enhancement, cfg.detector.options, cfg.embedding_dim};
    pipeline = std::make_unique<FeaturePipeline>(*detector, pc, &cache, enhancer.get());
  }

  SequenceFeatureFn from_cache(const LoadedScenarios& loaded) const {
    return [this, &loaded](const SequenceSample& s) {
      const Scenario& sc = loaded.get(s.scenario_id);
      Eigen::MatrixXd m(pipeline->config().embedding_dim, s.r);
      for (int t = 0; t < s.r; ++t) {
        const auto pos = static_cast<std::size_t>(s.first_index() + t);
        if (pos >= sc.samples.size()) {
          throw ConfigMismatchError("listing window " + std::to_string(s.anchor_index) +
                                    " exceeds scenario '" + s.scenario_id + "'; rebuild the dataset");
        }
        const auto fv = pipeline->cached(sc, pos);
        if (!fv) {
          throw MissingPrerequisiteError(
              "no cached features for scenario '" + s.scenario_id + "' seq_index " +
              std::to_string(sc.samples[pos].seq_index) + " under the current detector settings; run "
              "`blockpred extract-features` first");
        }
        for (std::size_t k = 0; k < fv->values.size(); ++k) {
          m(static_cast<Eigen::Index>(k), t) = fv->values[k];
        }
      }
      return m;
    };
  }
};

std::vector<MetricsReport> evaluate_models(const RunConfig& cfg, const LoadedScenarios& loaded,
                                           const FeatureStage& stage) {
  std::map<int, Checkpoint> ckpts;
  std::map<int, DatasetSplit> splits;
  std::vector<int> missing;
  for (int rp : cfg.sweep) {
    const auto path = model_path(cfg, rp);
    if (!fs::exists(path)) {
      missing.push_back(rp);
      continue;
    }
    ckpts.emplace(rp, load_checkpoint(path));
    const auto& meta = ckpts.at(rp).metadata;
    if (meta.contains("feature_pipeline") &&
        meta["feature_pipeline"].get<std::string>() != hex(stage.pipeline->config_hash())) {
      std::cerr << "warning: " << path.string()
                << " was trained on features from a different detector/enhancer setup\n";
    }
    splits.emplace(rp, read_listing_file(cfg, rp));
  }
  if (ckpts.empty()) {
    throw MissingPrerequisiteError("no trained model for scope '" + cfg.scope() + "' under " +
                                   (cfg.output_dir() / "models").string() +
                                   "; run `blockpred train` first");
  }
  for (int rp : missing) {
    std::cerr << "warning: no model for r'=" << rp << ", skipped\n";
  }
  const fs::path dir = report_dir(cfg);
  const auto result =
      evaluate_sweep(ckpts, splits, stage.from_cache(loaded), cfg.plots ? &dir : nullptr);
  write_file(dir / "report.json", reports_to_json_text(result.reports));
  return result.reports;
}

void print_reports(const std::vector<MetricsReport>& reports) {
  std::cout << "r'  scope            acc     f1      prec    recall  U\n";
  for (const auto& r : reports) {
    std::string scope = r.scope;
    scope.resize(std::max<std::size_t>(scope.size(), 16), ' ');
    std::cout << std::setw(2) << r.r_prime << "  " << scope << " " << fixed(r.top1_accuracy) << "  "
              << fixed(r.f1) << "  " << fixed(r.precision) << "  " << fixed(r.recall) << "  "
              << r.support << "\n";
  }
}

void train_models(const RunConfig& cfg, const LoadedScenarios& loaded, const FeatureStage& stage) {
  const auto features = stage.from_cache(loaded);
  for (int rp : cfg.sweep) {
    const DatasetSplit split = read_listing_file(cfg, rp);
    const auto train_set = build_sequence_dataset(split.train, features);
    const auto val_set = build_sequence_dataset(split.val, features);
    std::cerr << "training " << cfg.scope() << " r'=" << rp << ": " << train_set.size()
              << " train / " << val_set.size() << " val sequences, " << cfg.train.epochs
              << " epochs\n";
    const auto result = train(train_set, val_set, cfg.model, cfg.train, [&](const EpochRecord& e) {
      if (e.epoch % 10 == 0 || e.epoch == cfg.train.epochs) {
        std::cerr << "  epoch " << e.epoch << " loss " << fixed(e.train_loss) << " val_acc "
                  << fixed(e.val_acc) << " val_f1 " << fixed(e.val_f1) << "\n";
      }
    });
    Checkpoint ckpt = result.checkpoint;
    ckpt.metadata["scope"] = cfg.scope();
    ckpt.metadata["r_prime"] = rp;
    ckpt.metadata["window_r"] = cfg.window.r;
    ckpt.metadata["feature_pipeline"] = hex(stage.pipeline->config_hash());
    fs::create_directories(model_path(cfg, rp).parent_path());
    save_checkpoint(ckpt, model_path(cfg, rp));
    std::ostringstream log;
    write_training_log(result.log, log);
    write_file(train_log_path(cfg, rp), log.str());
    const auto& best = result.log.at(static_cast<std::size_t>(result.best_epoch - 1));
    std::cout << "r'=" << rp << " best epoch " << result.best_epoch << ": val_acc "
              << fixed(best.val_acc) << " val_f1 " << fixed(best.val_f1) << " -> "
              << model_path(cfg, rp).string() << "\n";
  }
}

void apply_path(json& doc, const char* section, const char* key, const std::string& value) {
  doc[section][key] = fs::absolute(value).lexically_normal().string();
}

}  // namespace

RunConfig resolve_config(const Overrides& o) {
  json doc = json::object();
  fs::path base = fs::current_path();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot open config file " + o.config);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(o.config + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(o.config + ": top level must be an object");
    base = fs::absolute(o.config).parent_path();
  }
  if (const char* cache = std::getenv("BLOCKPRED_CACHE_DIR"); cache && *cache) {
    apply_path(doc, "paths", "cache", cache);
  }
  if (const char* url = std::getenv("BLOCKPRED_BACKEND_URL"); url && *url) {
    doc["detector"]["backend"]["url"] = url;
    doc["detector"]["backend"].erase("command");
    auto& enh = doc["enhancement"]["backend"];
    if (enh.is_null() || (!enh.contains("url") && !enh.contains("command"))) enh["url"] = url;
  }
  if (o.seed) doc["seed"] = *o.seed;
  if (!o.out.empty()) apply_path(doc, "paths", "output", o.out);
  if (!o.scenario.empty()) doc["scenario"] = o.scenario;
  if (!o.detector.empty()) doc["detector"]["kind"] = o.detector;
  if (!o.enhance.empty()) doc["enhancement"]["mode"] = o.enhance;
  RunConfig cfg = run_config_from_json(doc, base);
  if (o.r_prime) {
    if (*o.r_prime < 1) throw ConfigError("--r-prime must be >= 1");
    cfg.sweep = {*o.r_prime};
  }
  return cfg;
}

void cmd_simulate(const RunConfig& cfg) {
  bool any = false;
  for (const auto& scene : cfg.simulation) {
    if (cfg.scenario && scene.scenario_id != *cfg.scenario) continue;
    any = true;
    SimScenario sim = simulate(scene);
    const fs::path dir = cfg.output_dir() / "sim" / scene.scenario_id;
    write_sim_scenario(sim, dir);
    const auto stats = scenario_stats(sim.scenario);
    std::cout << scene.scenario_id << ": " << stats.n_samples << " frames, " << stats.n_blocked
              << " blocked (" << fixed(static_cast<double>(stats.n_blocked) /
                                       static_cast<double>(std::max<std::size_t>(1, stats.n_samples)),
                                   3)
              << ") -> " << (dir / "manifest.csv").string() << "\n";
  }
  if (!any) throw ConfigError("no simulation scene named '" + cfg.scenario.value_or("") + "'");
}

void cmd_build_dataset(const RunConfig& cfg) {
  const auto loaded = load_scenarios(cfg);
  std::map<int, std::vector<DatasetSplit>> per_rp;
  std::ostringstream summary;
  summary << "r_prime,scenario_id,samples,windows,blocked_windows,balanced,train,val,test\n";
  for (const auto& sc : loaded.scenarios) {
    const auto splits = sweep_datasets(sc, cfg.window.r, cfg.sweep, cfg.seed, cfg.window.stride);
    for (const auto& [rp, split] : splits) per_rp[rp].push_back(split);
  }
  for (int rp : cfg.sweep) {
    auto& parts = per_rp.at(rp);
    std::size_t tot_windows = 0, tot_blocked = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& sc = loaded.scenarios[i];
      WindowConfig wc = cfg.window;
      wc.r_prime = rp;
      const auto windows = build_windows(sc, wc);
      const auto blocked = static_cast<std::size_t>(std::count_if(
          windows.begin(), windows.end(),
          [](const SequenceSample& s) { return s.label == LinkStatus::blocked; }));
      tot_windows += windows.size();
      tot_blocked += blocked;
      const auto& p = parts[i];
      summary << rp << "," << sc.scenario_id << "," << sc.samples.size() << "," << windows.size()
              << "," << blocked << "," << p.size() << "," << p.train.size() << "," << p.val.size()
              << "," << p.test.size() << "\n";
    }
    const DatasetSplit combined = combine_splits(parts);
    std::size_t samples = 0;
    for (const auto& sc : loaded.scenarios) samples += sc.samples.size();
    summary << rp << ",combined," << samples << "," << tot_windows << "," << tot_blocked << ","
            << combined.size() << "," << combined.train.size() << "," << combined.val.size() << ","
            << combined.test.size() << "\n";
    std::ostringstream listing;
    write_listing(combined, listing);
    write_file(listing_path(cfg, rp), listing.str());
    std::cout << "r'=" << rp << ": " << combined.size() << " sequences (train "
              << combined.train.size() << ", val " << combined.val.size() << ", test "
              << combined.test.size() << ") -> " << listing_path(cfg, rp).string() << "\n";
  }
  write_file(cfg.output_dir() / "datasets" / "summary.csv", summary.str());
}

void cmd_extract_features(const RunConfig& cfg) {
  const auto loaded = load_scenarios(cfg);
  std::set<std::pair<std::size_t, std::size_t>> frames;  // (scenario slot, position)
  for (int rp : cfg.sweep) {
    const DatasetSplit split = read_listing_file(cfg, rp);
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (const auto& s : *part) {
        std::size_t slot = loaded.scenarios.size();
        for (std::size_t i = 0; i < loaded.scenarios.size(); ++i) {
          if (loaded.scenarios[i].scenario_id == s.scenario_id) slot = i;
        }
        if (slot == loaded.scenarios.size()) {
          throw ConfigError("listing references unknown scenario '" + s.scenario_id + "'");
        }
        for (auto pos = s.first_index(); pos <= s.anchor_index; ++pos) {
          frames.emplace(slot, static_cast<std::size_t>(pos));
        }
      }
    }
  }

  FeatureStage stage(cfg, loaded);
  std::vector<std::pair<std::size_t, std::size_t>> todo;
  for (const auto& f : frames) {
    const auto& sc = loaded.scenarios[f.first];
    if (f.second >= sc.samples.size()) {
      throw ConfigMismatchError("listing frame " + std::to_string(f.second) + " exceeds scenario '" +
                                sc.scenario_id + "'; rebuild the dataset");
    }
    if (!stage.pipeline->cached(sc, f.second)) todo.push_back(f);
  }
  std::cerr << frames.size() << " frames referenced, " << frames.size() - todo.size()
            << " already cached, extracting " << todo.size() << "\n";

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex, save_mutex;
  std::exception_ptr error;
  std::atomic<std::size_t> done{0};
  const auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        stage.pipeline->frame_features(loaded.scenarios[todo[i].first], todo[i].second);
      } catch (...) {
        std::lock_guard lk(err_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
      // Periodic checkpoints keep an interrupted extraction resumable.
      if (++done % 2000 == 0) {
        std::lock_guard lk(save_mutex);
        stage.cache.save(stage.cache_file);
      }
    }
  };
  const unsigned n_threads =
      std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  fs::create_directories(stage.cache_file.parent_path());
  stage.cache.save(stage.cache_file);
  if (error) std::rethrow_exception(error);
  std::cout << stage.cache.size() << " feature vectors in " << stage.cache_file.string()
            << " (pipeline " << hex(stage.pipeline->config_hash()) << ")\n";
}

void cmd_train(const RunConfig& cfg) {
  const auto loaded = load_scenarios(cfg);
  const FeatureStage stage(cfg, loaded);
  train_models(cfg, loaded, stage);
}

void cmd_evaluate(const RunConfig& cfg) {
  const auto loaded = load_scenarios(cfg);
  const FeatureStage stage(cfg, loaded);
  print_reports(evaluate_models(cfg, loaded, stage));
  std::cout << "report: " << (report_dir(cfg) / "report.json").string() << "\n";
}

void cmd_sweep(const RunConfig& cfg) {
  const auto loaded = load_scenarios(cfg);
  const FeatureStage stage(cfg, loaded);
  train_models(cfg, loaded, stage);
  print_reports(evaluate_models(cfg, loaded, stage));
  std::cout << "report: " << (report_dir(cfg) / "report.json").string() << "\n";
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"blockpred: vision-aided mmWave blockage prediction pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "blockpred 0.1.0");

  Overrides o;
  std::optional<std::uint64_t> seed;
  std::optional<int> r_prime;
  using Command = void (*)(const RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"simulate", "Render synthetic scenarios (manifest, frames, ground truth)", cmd_simulate},
      {"build-dataset", "Window, balance and split every scenario for each r'", cmd_build_dataset},
      {"extract-features", "Run enhancement and detection, filling the feature cache",
       cmd_extract_features},
      {"train", "Train one GRU predictor per r'", cmd_train},
      {"evaluate", "Score trained models on the test split; write report.json and plots",
       cmd_evaluate},
      {"sweep", "train + evaluate over every r' of the sweep", cmd_sweep},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides config)");
    sub->add_option("--out", o.out, "Output directory (overrides paths.output)");
    sub->add_option("--scenario", o.scenario, "Restrict to one scenario id");
    sub->add_option("--r-prime", r_prime, "Use a single future window instead of the sweep list")
        ->check(CLI::PositiveNumber);
    sub->add_option("--detector", o.detector, "Detector backend")
        ->check(CLI::IsMember({"oracle", "external", "noisy"}));
    sub->add_option("--enhance", o.enhance, "Enhancement mode")
        ->check(CLI::IsMember({"auto", "always", "never", "external"}));
    handlers.emplace(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    o.seed = seed;
    o.r_prime = r_prime;
    const RunConfig cfg = resolve_config(o);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& [sub, fn] : handlers) {
      if (!sub->parsed()) continue;
      OutputLock lock(cfg.output_dir());
      write_resolved_config(cfg, sub->get_name());
      fn(cfg);
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"blockpred"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace blockpred::cli
