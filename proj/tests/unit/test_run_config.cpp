#include <gtest/gtest.h>

#include <cstdlib>

#include "blockpred/errors.hpp"
#include "cli.hpp"
#include "run_config.hpp"
#include "scratch_dir.hpp"

namespace bp = blockpred;
namespace cli = blockpred::cli;
using bp::testing::ScratchDir;
using nlohmann::json;

TEST(RunConfig, Defaults) {
  const auto cfg = cli::run_config_from_json(json::object(), "/base");
  EXPECT_EQ(cfg.embedding_dim, 28);
  EXPECT_EQ(cfg.model.input_dim, 28);
  EXPECT_EQ(cfg.model.hidden_dim, 128);
  EXPECT_EQ(cfg.model.num_layers, 2);
  EXPECT_EQ(cfg.model.seq_len, cfg.window.r);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 1e-3);
  EXPECT_EQ(cfg.train.batch_size, 128);
  EXPECT_EQ(cfg.train.epochs, 100);
  EXPECT_EQ(cfg.sweep.size(), 10u);
  EXPECT_EQ(cfg.output_dir(), std::filesystem::path("/base/blockpred_out"));
  EXPECT_EQ(cfg.cache_path(), std::filesystem::path("/base/blockpred_out/cache"));
  ASSERT_EQ(cfg.simulation.size(), 1u);
  EXPECT_EQ(cfg.simulation[0].scenario_id, "sim");
  EXPECT_EQ(cfg.manifest_paths(),
            std::vector<std::filesystem::path>{"/base/blockpred_out/sim/sim/manifest.csv"});
  EXPECT_EQ(cfg.scope(), "combined");
}

TEST(RunConfig, ParsesSections) {
  const json j = {
      {"paths", {{"manifests", {"a/m.csv", "/abs/n.csv"}}, {"output", "o"}, {"cache", "c"}}},
      {"seed", 9},
      {"window", {{"r", 5}, {"stride", 2}}},
      {"sweep", {1, 3}},
      {"split", {0.6, 0.2, 0.2}},
      {"enhancement", {{"mode", "always"}, {"gamma", 0.5}}},
      {"detector", {{"kind", "noisy"}, {"min_confidence", 0.3}, {"noise", {{"miss_prob", 0.2}, {"seed", 4}}}}},
      {"features", {{"embedding_dim", 5}, {"unit", "boxes"}}},
      {"model", {{"hidden_dim", 16}, {"num_layers", 1}}},
      {"train", {{"epochs", 3}, {"batch_size", 8}}},
      {"simulation", {{{"scenario_id", "x"}, {"duration_s", 12.5}, {"los_corridor", {0.1, 0.2, 0.3, 0.4}}}}},
  };
  const auto cfg = cli::run_config_from_json(j, "/base");
  EXPECT_EQ(cfg.manifest_paths(), (std::vector<std::filesystem::path>{"/base/a/m.csv", "/abs/n.csv"}));
  EXPECT_EQ(cfg.cache_path(), std::filesystem::path("/base/c"));
  EXPECT_EQ(cfg.window.r, 5);
  EXPECT_EQ(cfg.model.seq_len, 5);
  EXPECT_EQ(cfg.window.stride, 2);
  EXPECT_EQ(cfg.sweep, (std::vector<int>{1, 3}));
  EXPECT_EQ(cfg.enhancement.mode, bp::EnhanceMode::always);
  EXPECT_EQ(cfg.detector.kind, cli::DetectorKind::noisy);
  EXPECT_DOUBLE_EQ(cfg.detector.noise.miss_prob, 0.2);
  EXPECT_DOUBLE_EQ(cfg.detector.noise.jitter_std, 0.01);
  EXPECT_EQ(cfg.noise_seed(), 4u);
  EXPECT_EQ(cfg.embedding_dim, 20);
  EXPECT_EQ(cfg.model.input_dim, 20);
  EXPECT_EQ(cfg.train.seed, 9u);
  ASSERT_EQ(cfg.simulation.size(), 1u);
  EXPECT_DOUBLE_EQ(cfg.simulation[0].duration_s, 12.5);
  EXPECT_DOUBLE_EQ(cfg.simulation[0].los_corridor.y2, 0.4);
}

TEST(RunConfig, EmbeddingDimRounding) {
  std::vector<std::string> warnings;
  EXPECT_EQ(cli::resolve_embedding_dim(28, "scalars", warnings), 28);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(cli::resolve_embedding_dim(30, "scalars", warnings), 28);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("30"), std::string::npos);
  EXPECT_EQ(cli::resolve_embedding_dim(7, "boxes", warnings), 28);
  EXPECT_THROW(cli::resolve_embedding_dim(2, "scalars", warnings), bp::ConfigError);
  EXPECT_THROW(cli::resolve_embedding_dim(8, "pixels", warnings), bp::ConfigError);
}

TEST(RunConfig, RejectsUnknownAndInvalid) {
  EXPECT_THROW(cli::run_config_from_json({{"sed", 1}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"train", {{"epoch", 1}}}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"seed", "x"}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"sweep", json::array()}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"sweep", {0}}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"split", {0.5, 0.2, 0.2}}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"detector", {{"kind", "yolo"}}}}, "/"), bp::ConfigError);
  EXPECT_THROW(cli::run_config_from_json({{"simulation", json::array({{{"speed_range", {0.3, 0.1}}}})}}, "/"), bp::ConfigError);
}

TEST(RunConfig, JsonRoundTrip) {
  const json j = {{"seed", 3}, {"sweep", {2, 4}}, {"simulation", {{{"scenario_id", "q"}, {"object_rate", 0.7}}}}};
  const auto cfg = cli::run_config_from_json(j, "/base");
  const auto again = cli::run_config_from_json(json::parse(cli::to_json(cfg).dump()), "/elsewhere");
  EXPECT_EQ(again.sweep, cfg.sweep);
  EXPECT_EQ(again.seed, cfg.seed);
  EXPECT_EQ(again.output_dir(), cfg.output_dir());
  EXPECT_DOUBLE_EQ(again.simulation[0].object_rate, 0.7);
  EXPECT_EQ(again.simulation[0].seed, cfg.simulation[0].seed);
}

TEST(ResolveConfig, PrecedenceFileEnvFlags) {
  ScratchDir dir;
  bp::testing::write_file(dir / "cfg.json", R"({"seed": 1, "paths": {"output": "from_file", "cache": "file_cache"}})");
  ::setenv("BLOCKPRED_CACHE_DIR", (dir / "env_cache").c_str(), 1);
  cli::Overrides o;
  o.config = (dir / "cfg.json").string();
  auto cfg = cli::resolve_config(o);
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.output_dir(), dir / "from_file");
  EXPECT_EQ(cfg.cache_path(), dir / "env_cache");

  o.seed = 8;
  o.out = (dir / "flag_out").string();
  o.r_prime = 4;
  o.detector = "noisy";
  o.enhance = "never";
  o.scenario = "s1";
  cfg = cli::resolve_config(o);
  ::unsetenv("BLOCKPRED_CACHE_DIR");
  EXPECT_EQ(cfg.seed, 8u);
  EXPECT_EQ(cfg.output_dir(), dir / "flag_out");
  EXPECT_EQ(cfg.sweep, std::vector<int>{4});
  EXPECT_EQ(cfg.detector.kind, cli::DetectorKind::noisy);
  EXPECT_EQ(cfg.enhancement.mode, bp::EnhanceMode::never);
  EXPECT_EQ(cfg.scope(), "s1");

  bp::testing::write_file(dir / "bad.json", "{not json");
  o = {};
  o.config = (dir / "bad.json").string();
  EXPECT_THROW(cli::resolve_config(o), bp::ConfigError);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(cli::exit_code_for(bp::ErrorKind::backend), 4);
  EXPECT_EQ(cli::exit_code_for(bp::ErrorKind::missing_prerequisite), 3);
  EXPECT_EQ(cli::exit_code_for(bp::ErrorKind::config), 2);
  EXPECT_EQ(cli::exit_code_for(bp::ErrorKind::io), 2);
  EXPECT_EQ(cli::exit_code_for(bp::ErrorKind::validation), 2);
}
