#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& j, const std::string& section,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(section + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type (" + it->dump() + ")");
  }
}

std::array<double, 2> read_range(const json& j, const char* key, std::array<double, 2> fallback,
                                 const std::string& section) {
  std::vector<double> v{fallback[0], fallback[1]};
  read(j, key, v, section);
  if (v.size() != 2) throw ConfigError(section + "." + key + ": expected [min, max]");
  return {v[0], v[1]};
}

BackendEndpoint read_endpoint(const json& j, const std::string& section) {
  BackendEndpoint e;
  check_keys(j, section, {"url", "command", "timeout_ms"});
  read(j, "url", e.url, section);
  read(j, "command", e.command, section);
  read(j, "timeout_ms", e.timeout_ms, section);
  if (!e.url.empty() && !e.command.empty()) {
    throw ConfigError(section + ": set either url or command, not both");
  }
  if (e.timeout_ms <= 0) throw ConfigError(section + ".timeout_ms must be positive");
  return e;
}

ordered_json endpoint_json(const BackendEndpoint& e) {
  ordered_json j;
  j["url"] = e.url;
  j["command"] = e.command;
  j["timeout_ms"] = e.timeout_ms;
  return j;
}

}  // namespace

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::oracle: return "oracle";
    case DetectorKind::noisy: return "noisy";
    case DetectorKind::external: return "external";
  }
  return "oracle";
}

DetectorKind detector_kind_from_string(const std::string& s) {
  if (s == "oracle") return DetectorKind::oracle;
  if (s == "noisy") return DetectorKind::noisy;
  if (s == "external") return DetectorKind::external;
  throw ConfigError("unknown detector '" + s + "' (expected oracle, noisy or external)");
}

int resolve_embedding_dim(int value, const std::string& unit, std::vector<std::string>& warnings) {
  if (unit == "boxes") {
    if (value <= 0) throw ConfigError("features.embedding_dim must be positive");
    return 4 * value;
  }
  if (unit != "scalars") {
    throw ConfigError("features.unit must be \"scalars\" or \"boxes\", got '" + unit + "'");
  }
  if (value < 4) throw ConfigError("features.embedding_dim must be at least 4");
  if (value % 4 != 0) {
    const int rounded = value - value % 4;
    warnings.push_back("embedding_dim " + std::to_string(value) +
                       " is not a multiple of 4 coordinates per box; using " +
                       std::to_string(rounded) + " (" + std::to_string(rounded / 4) + " boxes)");
    return rounded;
  }
  return value;
}

ordered_json to_json(const SceneConfig& s) {
  ordered_json j;
  j["scenario_id"] = s.scenario_id;
  j["image_width"] = s.image_width;
  j["image_height"] = s.image_height;
  j["los_corridor"] = {s.los_corridor.x1, s.los_corridor.y1, s.los_corridor.x2, s.los_corridor.y2};
  j["object_rate"] = s.object_rate;
  j["speed_range"] = {s.speed_min, s.speed_max};
  j["width_range"] = {s.width_min, s.width_max};
  j["height_range"] = {s.height_min, s.height_max};
  j["night_fraction"] = s.night_fraction;
  j["night_noise_std"] = s.night_noise_std;
  j["duration_s"] = s.duration_s;
  j["sample_rate_hz"] = s.sample_rate_hz;
  j["seed"] = s.seed;
  return j;
}

SceneConfig scene_config_from_json(const json& j) {
  const std::string sec = "simulation";
  check_keys(j, sec,
             {"scenario_id", "image_width", "image_height", "los_corridor", "object_rate",
              "speed_range", "width_range", "height_range", "night_fraction", "night_noise_std",
              "duration_s", "sample_rate_hz", "seed"});
  SceneConfig s;
  read(j, "scenario_id", s.scenario_id, sec);
  read(j, "image_width", s.image_width, sec);
  read(j, "image_height", s.image_height, sec);
  std::vector<double> c{s.los_corridor.x1, s.los_corridor.y1, s.los_corridor.x2, s.los_corridor.y2};
  read(j, "los_corridor", c, sec);
  if (c.size() != 4) throw ConfigError("simulation.los_corridor: expected [x1, y1, x2, y2]");
  s.los_corridor = {c[0], c[1], c[2], c[3]};
  read(j, "object_rate", s.object_rate, sec);
  const auto v = read_range(j, "speed_range", {s.speed_min, s.speed_max}, sec);
  s.speed_min = v[0];
  s.speed_max = v[1];
  const auto w = read_range(j, "width_range", {s.width_min, s.width_max}, sec);
  s.width_min = w[0];
  s.width_max = w[1];
  const auto h = read_range(j, "height_range", {s.height_min, s.height_max}, sec);
  s.height_min = h[0];
  s.height_max = h[1];
  read(j, "night_fraction", s.night_fraction, sec);
  read(j, "night_noise_std", s.night_noise_std, sec);
  read(j, "duration_s", s.duration_s, sec);
  read(j, "sample_rate_hz", s.sample_rate_hz, sec);
  read(j, "seed", s.seed, sec);
  if (s.scenario_id.empty()) throw ConfigError("simulation.scenario_id must not be empty");
  s.validate();
  return s;
}

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

std::filesystem::path RunConfig::cache_path() const {
  return cache_dir ? resolve(*cache_dir) : output_dir() / "cache";
}

std::vector<std::filesystem::path> RunConfig::manifest_paths() const {
  std::vector<std::filesystem::path> out;
  if (!manifests.empty()) {
    for (const auto& m : manifests) out.push_back(resolve(m));
    return out;
  }
  for (const auto& s : simulation) out.push_back(output_dir() / "sim" / s.scenario_id / "manifest.csv");
  return out;
}

std::uint64_t RunConfig::noise_seed() const {
  return detector.noise_seed.value_or(derive_seed(seed, "detector-noise"));
}

void RunConfig::validate() const {
  window.validate();
  if (sweep.empty()) throw ConfigError("sweep must list at least one r'");
  for (int rp : sweep) {
    if (rp < 1) throw ConfigError("sweep entries must be >= 1");
  }
  const auto& f = split_fractions;
  if (f[0] <= 0.0 || f[1] < 0.0 || f[2] <= 0.0 || std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative, with non-empty train and test, and sum to 1");
  }
  enhancement.validate();
  if (enhancement.mode == EnhanceMode::external && !enhancer.configured()) {
    throw ConfigError("enhancement mode 'external' needs enhancement.backend.url or .command");
  }
  if (detector.kind == DetectorKind::external && !detector.backend.configured()) {
    throw ConfigError(
        "detector 'external' needs detector.backend.url, detector.backend.command or "
        "BLOCKPRED_BACKEND_URL");
  }
  if (detector.options.min_confidence < 0.0 || detector.options.min_confidence > 1.0) {
    throw ConfigError("detector.min_confidence must be in [0,1]");
  }
  const auto& n = detector.noise;
  if (n.jitter_std < 0.0 || n.miss_prob < 0.0 || n.miss_prob > 1.0 || n.false_positive_rate < 0.0) {
    throw ConfigError("detector.noise: jitter_std >= 0, miss_prob in [0,1], false_positive_rate >= 0");
  }
  validate_embedding_dim(embedding_dim);
  model.validate();
  train.validate();
  for (std::size_t i = 0; i < simulation.size(); ++i) {
    simulation[i].validate();
    for (std::size_t k = 0; k < i; ++k) {
      if (simulation[k].scenario_id == simulation[i].scenario_id) {
        throw ConfigError("duplicate simulation scenario_id '" + simulation[i].scenario_id + "'");
      }
    }
  }
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config",
             {"paths", "seed", "window", "sweep", "split", "scenario", "enhancement", "detector",
              "features", "model", "train", "evaluation", "simulation"});
  RunConfig cfg;
  cfg.base_dir = base_dir;
  read(j, "seed", cfg.seed, "config");

  if (const auto it = j.find("paths"); it != j.end()) {
    check_keys(*it, "paths", {"manifests", "output", "cache"});
    std::vector<std::string> manifests;
    read(*it, "manifests", manifests, "paths");
    for (auto& m : manifests) cfg.manifests.emplace_back(m);
    std::string output = cfg.output.string();
    read(*it, "output", output, "paths");
    cfg.output = output;
    std::string cache;
    read(*it, "cache", cache, "paths");
    if (!cache.empty()) cfg.cache_dir = cache;
  }

  if (const auto it = j.find("window"); it != j.end()) {
    check_keys(*it, "window", {"r", "stride"});
    read(*it, "r", cfg.window.r, "window");
    read(*it, "stride", cfg.window.stride, "window");
  }
  read(j, "sweep", cfg.sweep, "config");
  std::sort(cfg.sweep.begin(), cfg.sweep.end());
  cfg.sweep.erase(std::unique(cfg.sweep.begin(), cfg.sweep.end()), cfg.sweep.end());
  std::vector<double> fr(cfg.split_fractions.begin(), cfg.split_fractions.end());
  read(j, "split", fr, "config");
  if (fr.size() != 3) throw ConfigError("split: expected [train, val, test] fractions");
  cfg.split_fractions = {fr[0], fr[1], fr[2]};
  std::string scenario;
  read(j, "scenario", scenario, "config");
  if (!scenario.empty()) cfg.scenario = scenario;

  if (const auto it = j.find("enhancement"); it != j.end()) {
    const std::string sec = "enhancement";
    check_keys(*it, sec, {"mode", "brightness_threshold", "gamma", "clip_low", "clip_high", "backend"});
    auto& e = cfg.enhancement;
    std::string mode = to_string(e.mode);
    read(*it, "mode", mode, sec);
    e.mode = enhance_mode_from_string(mode);
    read(*it, "brightness_threshold", e.brightness_threshold, sec);
    read(*it, "gamma", e.gamma, sec);
    read(*it, "clip_low", e.clip_low, sec);
    read(*it, "clip_high", e.clip_high, sec);
    if (const auto b = it->find("backend"); b != it->end()) {
      cfg.enhancer = read_endpoint(*b, "enhancement.backend");
    }
  }

  if (const auto it = j.find("detector"); it != j.end()) {
    const std::string sec = "detector";
    check_keys(*it, sec, {"kind", "relevant_classes", "min_confidence", "noise", "backend"});
    auto& d = cfg.detector;
    std::string kind = to_string(d.kind);
    read(*it, "kind", kind, sec);
    d.kind = detector_kind_from_string(kind);
    std::vector<int> classes(d.options.relevant_classes.begin(), d.options.relevant_classes.end());
    read(*it, "relevant_classes", classes, sec);
    d.options.relevant_classes = {classes.begin(), classes.end()};
    read(*it, "min_confidence", d.options.min_confidence, sec);
    if (const auto n = it->find("noise"); n != it->end()) {
      check_keys(*n, "detector.noise", {"jitter_std", "miss_prob", "false_positive_rate", "seed"});
      read(*n, "jitter_std", d.noise.jitter_std, "detector.noise");
      read(*n, "miss_prob", d.noise.miss_prob, "detector.noise");
      read(*n, "false_positive_rate", d.noise.false_positive_rate, "detector.noise");
      if (n->contains("seed") && !n->at("seed").is_null()) {
        std::uint64_t s = 0;
        read(*n, "seed", s, "detector.noise");
        d.noise_seed = s;
      }
    }
    if (const auto b = it->find("backend"); b != it->end()) {
      d.backend = read_endpoint(*b, "detector.backend");
    }
  }

  int z = cfg.embedding_dim;
  std::string unit = "scalars";
  if (const auto it = j.find("features"); it != j.end()) {
    check_keys(*it, "features", {"embedding_dim", "unit"});
    read(*it, "embedding_dim", z, "features");
    read(*it, "unit", unit, "features");
  }
  cfg.embedding_dim = resolve_embedding_dim(z, unit, cfg.warnings);

  if (const auto it = j.find("model"); it != j.end()) {
    check_keys(*it, "model", {"hidden_dim", "num_layers"});
    read(*it, "hidden_dim", cfg.model.hidden_dim, "model");
    read(*it, "num_layers", cfg.model.num_layers, "model");
  }
  cfg.model.input_dim = cfg.embedding_dim;
  cfg.model.seq_len = cfg.window.r;

  if (const auto it = j.find("train"); it != j.end()) {
    const std::string sec = "train";
    check_keys(*it, sec, {"learning_rate", "batch_size", "epochs", "beta1", "beta2", "epsilon"});
    read(*it, "learning_rate", cfg.train.learning_rate, sec);
    read(*it, "batch_size", cfg.train.batch_size, sec);
    read(*it, "epochs", cfg.train.epochs, sec);
    read(*it, "beta1", cfg.train.beta1, sec);
    read(*it, "beta2", cfg.train.beta2, sec);
    read(*it, "epsilon", cfg.train.epsilon, sec);
  }
  cfg.train.seed = cfg.seed;

  if (const auto it = j.find("evaluation"); it != j.end()) {
    check_keys(*it, "evaluation", {"plots"});
    read(*it, "plots", cfg.plots, "evaluation");
  }

  if (const auto it = j.find("simulation"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ConfigError("simulation: expected an array of scenes");
    for (const auto& scene : *it) {
      SceneConfig s = scene_config_from_json(scene);
      if (!scene.contains("seed")) s.seed = derive_seed(cfg.seed, s.scenario_id);
      cfg.simulation.push_back(std::move(s));
    }
  } else {
    SceneConfig s;
    s.seed = derive_seed(cfg.seed, s.scenario_id);
    cfg.simulation.push_back(s);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return run_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  ordered_json paths;
  paths["manifests"] = ordered_json::array();
  for (const auto& m : cfg.manifests) paths["manifests"].push_back(cfg.resolve(m).string());
  paths["output"] = cfg.output_dir().string();
  paths["cache"] = cfg.cache_path().string();
  j["paths"] = paths;
  j["seed"] = cfg.seed;
  j["window"] = {{"r", cfg.window.r}, {"stride", cfg.window.stride}};
  j["sweep"] = cfg.sweep;
  j["split"] = {cfg.split_fractions[0], cfg.split_fractions[1], cfg.split_fractions[2]};
  if (cfg.scenario) j["scenario"] = *cfg.scenario;

  ordered_json e;
  e["mode"] = to_string(cfg.enhancement.mode);
  e["brightness_threshold"] = cfg.enhancement.brightness_threshold;
  e["gamma"] = cfg.enhancement.gamma;
  e["clip_low"] = cfg.enhancement.clip_low;
  e["clip_high"] = cfg.enhancement.clip_high;
  e["backend"] = endpoint_json(cfg.enhancer);
  j["enhancement"] = e;

  ordered_json d;
  d["kind"] = to_string(cfg.detector.kind);
  d["relevant_classes"] = std::vector<int>(cfg.detector.options.relevant_classes.begin(),
                                           cfg.detector.options.relevant_classes.end());
  d["min_confidence"] = cfg.detector.options.min_confidence;
  d["noise"] = {{"jitter_std", cfg.detector.noise.jitter_std},
                {"miss_prob", cfg.detector.noise.miss_prob},
                {"false_positive_rate", cfg.detector.noise.false_positive_rate},
                {"seed", cfg.noise_seed()}};
  d["backend"] = endpoint_json(cfg.detector.backend);
  j["detector"] = d;

  j["features"] = {{"embedding_dim", cfg.embedding_dim}, {"unit", "scalars"}};
  j["model"] = {{"hidden_dim", cfg.model.hidden_dim}, {"num_layers", cfg.model.num_layers}};
  ordered_json t;
  t["learning_rate"] = cfg.train.learning_rate;
  t["batch_size"] = cfg.train.batch_size;
  t["epochs"] = cfg.train.epochs;
  t["beta1"] = cfg.train.beta1;
  t["beta2"] = cfg.train.beta2;
  t["epsilon"] = cfg.train.epsilon;
  j["train"] = t;
  j["evaluation"] = {{"plots", cfg.plots}};
  j["simulation"] = ordered_json::array();
  for (const auto& s : cfg.simulation) j["simulation"].push_back(to_json(s));
  return j;
}

}  // namespace blockpred::cli
