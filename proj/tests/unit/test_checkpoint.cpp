#include <gtest/gtest.h>

#include <sstream>

#include "blockpred/checkpoint.hpp"
#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"
#include "scratch_dir.hpp"

namespace bp = blockpred;
using bp::testing::ScratchDir;

namespace {

bp::Checkpoint sample_checkpoint(const std::string& scalar) {
  bp::ModelConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_dim = 5;
  cfg.seq_len = 4;
  auto m = bp::GruClassifier<double>::initialized(cfg, 9);
  bp::Checkpoint ck;
  ck.model = cfg;
  ck.scalar = scalar;
  ck.parameters = m.parameters();
  if (scalar == "float32") ck.parameters = ck.parameters.cast<float>().cast<double>();
  ck.metadata = {{"seed", 9}, {"note", "unit"}};
  return ck;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitIdentical) {
  for (const std::string scalar : {"float32", "float64"}) {
    const auto ck = sample_checkpoint(scalar);
    std::stringstream buf;
    bp::save_checkpoint(ck, buf);
    const auto back = bp::load_checkpoint(buf);
    EXPECT_EQ(back.model, ck.model);
    EXPECT_EQ(back.scalar, scalar);
    EXPECT_EQ(back.parameters, ck.parameters);
    EXPECT_EQ(back.metadata, ck.metadata);

    bp::Rng rng(1);
    std::vector<Eigen::MatrixXd> xs;
    for (int t = 0; t < ck.model.seq_len; ++t) {
      Eigen::MatrixXd x(ck.model.input_dim, 3);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform01();
      xs.push_back(x);
    }
    EXPECT_EQ(bp::inference_model(back).forward(xs), bp::inference_model(ck).forward(xs));
  }
}

TEST(Checkpoint, FileRoundTrip) {
  ScratchDir dir;
  const auto ck = sample_checkpoint("float32");
  bp::save_checkpoint(ck, dir / "m.ckpt");
  EXPECT_EQ(bp::load_checkpoint(dir / "m.ckpt").parameters, ck.parameters);
  EXPECT_THROW(bp::load_checkpoint(dir / "absent.ckpt"), bp::IoError);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto ck = sample_checkpoint("float64");
  std::stringstream buf;
  bp::save_checkpoint(ck, buf);
  const std::string good = buf.str();

  auto load = [](const std::string& bytes) {
    std::istringstream in(bytes);
    return bp::load_checkpoint(in);
  };
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(load(bad_magic), bp::ParseError);
  EXPECT_THROW(load(good.substr(0, good.size() - 3)), bp::ParseError);
  EXPECT_THROW(load(good.substr(0, 10)), bp::ParseError);
  EXPECT_THROW(load(good + "trailing"), bp::ParseError);
  EXPECT_THROW(load(""), bp::ParseError);
}

TEST(Checkpoint, ModelConfigJson) {
  bp::ModelConfig cfg;
  cfg.input_dim = 12;
  cfg.seq_len = 3;
  EXPECT_EQ(bp::model_config_from_json(bp::to_json(cfg)), cfg);
  EXPECT_THROW(bp::model_config_from_json(nlohmann::json{{"input_dim", "x"}}), bp::ParseError);
}
