#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

#include "blockpred/predictor.hpp"

namespace blockpred {

/// Trained model parameters plus provenance.
///
/// On-disk container (all integers little-endian):
///   8 bytes   magic "BPCKPT\0\1"
///   u32       container version
///   u64       header length L
///   L bytes   UTF-8 JSON header: format version, endianness, scalar type,
///             storage order, model_config, parameter table
///             [{name, rows, cols, offset}], metadata
///   payload   parameter_count values of the declared scalar type
struct Checkpoint {
  ModelConfig model;
  /// "float32" or "float64": precision the parameters were trained in.
  std::string scalar = "float32";
  /// Flat parameters in parameter_layout(model) order. Float32 values are
  /// widened exactly.
  Eigen::VectorXd parameters;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws ParseError on malformed containers, IoError when unreadable.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Model with the checkpoint's parameters, evaluated in double precision.
GruClassifier<double> inference_model(const Checkpoint& ckpt);

}  // namespace blockpred
