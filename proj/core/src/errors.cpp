#include "blockpred/errors.hpp"

namespace blockpred {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::validation: return "ValidationError";
    case ErrorKind::io: return "IoError";
    case ErrorKind::length: return "LengthError";
    case ErrorKind::insufficient_data: return "InsufficientDataError";
    case ErrorKind::empty_class: return "EmptyClassError";
    case ErrorKind::fraction: return "FractionError";
    case ErrorKind::shape: return "ShapeError";
    case ErrorKind::backend: return "BackendError";
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::empty_split: return "EmptySplitError";
    case ErrorKind::divergence: return "DivergenceError";
    case ErrorKind::config_mismatch: return "ConfigMismatchError";
    case ErrorKind::missing_split: return "MissingSplitError";
    case ErrorKind::empty: return "EmptyError";
    case ErrorKind::index: return "IndexError";
    case ErrorKind::missing_prerequisite: return "MissingPrerequisiteError";
  }
  return "Error";
}

FrameError::FrameError(const Error& inner, std::string scenario_id, std::uint64_t seq_index)
    : Error(inner.kind(), "frame (" + scenario_id + ", " + std::to_string(seq_index) +
                              "): " + inner.what()),
      scenario_id_(std::move(scenario_id)),
      seq_index_(seq_index) {}

}  // namespace blockpred
