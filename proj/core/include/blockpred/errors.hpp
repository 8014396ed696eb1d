#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockpred {

/// Error category. The CLI maps categories onto process exit codes.
enum class ErrorKind {
  parse,
  validation,
  io,
  length,
  insufficient_data,
  empty_class,
  fraction,
  shape,
  backend,
  config,
  empty_split,
  divergence,
  config_mismatch,
  missing_split,
  empty,
  index,
  missing_prerequisite,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define BLOCKPRED_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

BLOCKPRED_DEFINE_ERROR(ValidationError, validation);
BLOCKPRED_DEFINE_ERROR(IoError, io);
BLOCKPRED_DEFINE_ERROR(LengthError, length);
BLOCKPRED_DEFINE_ERROR(InsufficientDataError, insufficient_data);
BLOCKPRED_DEFINE_ERROR(EmptyClassError, empty_class);
BLOCKPRED_DEFINE_ERROR(FractionError, fraction);
BLOCKPRED_DEFINE_ERROR(ShapeError, shape);
BLOCKPRED_DEFINE_ERROR(BackendError, backend);
BLOCKPRED_DEFINE_ERROR(ConfigError, config);
BLOCKPRED_DEFINE_ERROR(EmptySplitError, empty_split);
BLOCKPRED_DEFINE_ERROR(DivergenceError, divergence);
BLOCKPRED_DEFINE_ERROR(ConfigMismatchError, config_mismatch);
BLOCKPRED_DEFINE_ERROR(MissingSplitError, missing_split);
BLOCKPRED_DEFINE_ERROR(EmptyError, empty);
BLOCKPRED_DEFINE_ERROR(IndexError, index);
BLOCKPRED_DEFINE_ERROR(MissingPrerequisiteError, missing_prerequisite);

#undef BLOCKPRED_DEFINE_ERROR

/// Malformed input text; `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(ErrorKind::parse, line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A per-frame failure annotated with the frame identity. Keeps the kind of
/// the underlying error so callers can still tell backend failures apart.
class FrameError : public Error {
 public:
  FrameError(const Error& inner, std::string scenario_id, std::uint64_t seq_index);
  const std::string& scenario_id() const noexcept { return scenario_id_; }
  std::uint64_t seq_index() const noexcept { return seq_index_; }

 private:
  std::string scenario_id_;
  std::uint64_t seq_index_;
};

}  // namespace blockpred
