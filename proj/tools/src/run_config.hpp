#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "blockpred/detection.hpp"
#include "blockpred/enhancement.hpp"
#include "blockpred/predictor.hpp"
#include "blockpred/synthsim.hpp"
#include "blockpred/windowing.hpp"

namespace blockpred::cli {

/// External backend location: an http:// URL or a command line.
struct BackendEndpoint {
  std::string url;
  std::string command;
  int timeout_ms = 30000;

  bool configured() const { return !url.empty() || !command.empty(); }
};

enum class DetectorKind { oracle, noisy, external };

std::string to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(const std::string& s);

struct DetectorSettings {
  DetectorKind kind = DetectorKind::oracle;
  DetectorOptions options;
  DetectionNoise noise{0.01, 0.1, 0.0};
  std::optional<std::uint64_t> noise_seed;  // defaults to a stream of the run seed
  BackendEndpoint backend;
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::vector<std::filesystem::path> manifests;
  std::filesystem::path output = "blockpred_out";
  std::optional<std::filesystem::path> cache_dir;

  std::uint64_t seed = 0;
  WindowConfig window;  // r_prime unused; the sweep list drives it
  std::vector<int> sweep{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  SplitFractions split_fractions = kDefaultSplitFractions;
  std::optional<std::string> scenario;  // restrict every stage to one scenario

  EnhancementConfig enhancement;
  BackendEndpoint enhancer;
  DetectorSettings detector;
  int embedding_dim = 28;  // Z, in scalars after normalization

  ModelConfig model;
  TrainConfig train;
  bool plots = true;

  std::vector<SceneConfig> simulation;
  std::vector<std::string> warnings;  // collected while resolving

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path output_dir() const { return resolve(output); }
  std::filesystem::path cache_path() const;
  /// Manifests to load: explicit ones, else those written by `simulate`.
  std::vector<std::filesystem::path> manifest_paths() const;
  std::uint64_t noise_seed() const;
  /// Scope name of trained models: the scenario filter or "combined".
  std::string scope() const { return scenario.value_or("combined"); }

  /// Throws ConfigError.
  void validate() const;
};

/// Parses a config document. Unknown keys are rejected. `base_dir` anchors
/// relative paths. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Normalizes an embedding size: multiples of 4 pass, others round down to
/// the nearest multiple of 4 with a warning; `unit == "boxes"` multiplies by 4.
int resolve_embedding_dim(int value, const std::string& unit, std::vector<std::string>& warnings);

nlohmann::ordered_json to_json(const SceneConfig& scene);
SceneConfig scene_config_from_json(const nlohmann::json& j);

}  // namespace blockpred::cli
