#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blockpred/errors.hpp"
#include "run_config.hpp"

namespace blockpred::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingPrerequisite = 3,
  kExitBackend = 4,
};

int exit_code_for(ErrorKind kind);

/// Flag values that override the config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scenario;
  std::optional<int> r_prime;
  std::string detector;
  std::string enhance;
};

/// Loads the config (or defaults), then applies environment variables and
/// flags, in that order of precedence.
RunConfig resolve_config(const Overrides& o);

void cmd_simulate(const RunConfig& cfg);
void cmd_build_dataset(const RunConfig& cfg);
void cmd_extract_features(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace blockpred::cli
