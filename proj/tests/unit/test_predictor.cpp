#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "blockpred/errors.hpp"
#include "blockpred/predictor.hpp"
#include "blockpred/rng.hpp"
#include "oracles.hpp"

namespace bp = blockpred;
using Model = bp::GruClassifier<double>;
using Mat = Model::Matrix;

namespace {

bp::ModelConfig tiny(int layers = 2) {
  bp::ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_dim = 3;
  cfg.num_layers = layers;
  cfg.seq_len = 3;
  return cfg;
}

std::vector<Mat> random_inputs(const bp::ModelConfig& cfg, int batch, std::uint64_t seed) {
  bp::Rng rng(seed);
  std::vector<Mat> xs;
  for (int t = 0; t < cfg.seq_len; ++t) {
    Mat x(cfg.input_dim, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    xs.push_back(x);
  }
  return xs;
}

Model randomized(const bp::ModelConfig& cfg, std::uint64_t seed) {
  auto m = Model::initialized(cfg, seed);
  bp::Rng rng(seed + 100);
  // Non-zero biases so every parameter block is exercised.
  for (Eigen::Index i = 0; i < m.parameters().size(); ++i) m.parameters()[i] += rng.uniform(-0.3, 0.3);
  return m;
}

// Scalar-loop GRU read straight from the documented parameter layout.
std::vector<double> naive_probs(const Model& m, const std::vector<Mat>& xs, int b) {
  const auto& cfg = m.config();
  std::map<std::string, bp::ParameterInfo> info;
  for (const auto& p : m.layout()) info[p.name] = p;
  auto w = [&](const std::string& name, int r, int c) {
    const auto& p = info.at(name);
    return m.parameters()[static_cast<Eigen::Index>(p.offset + static_cast<std::size_t>(c) * p.rows + r)];
  };
  const int H = cfg.hidden_dim;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<std::vector<double>> seq;
  for (const auto& x : xs) {
    std::vector<double> col(static_cast<std::size_t>(cfg.input_dim));
    for (int i = 0; i < cfg.input_dim; ++i) col[static_cast<std::size_t>(i)] = x(i, b);
    seq.push_back(col);
  }
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string pre = "gru.l" + std::to_string(l) + ".";
    std::vector<double> h(static_cast<std::size_t>(H), 0.0);
    std::vector<std::vector<double>> out;
    for (const auto& x : seq) {
      std::vector<double> gi(3 * H), gh(3 * H);
      for (int g = 0; g < 3 * H; ++g) {
        gi[g] = w(pre + "bias_ih", g, 0);
        for (std::size_t i = 0; i < x.size(); ++i) gi[g] += w(pre + "weight_ih", g, static_cast<int>(i)) * x[i];
        gh[g] = w(pre + "bias_hh", g, 0);
        for (int j = 0; j < H; ++j) gh[g] += w(pre + "weight_hh", g, j) * h[j];
      }
      std::vector<double> hn(H);
      for (int j = 0; j < H; ++j) {
        const double r = sig(gi[j] + gh[j]);
        const double z = sig(gi[H + j] + gh[H + j]);
        const double n = std::tanh(gi[2 * H + j] + r * gh[2 * H + j]);
        hn[j] = (1 - z) * n + z * h[j];
      }
      h = hn;
      out.push_back(h);
    }
    seq = out;
  }
  const auto& last = seq.back();
  std::vector<double> logits(static_cast<std::size_t>(cfg.num_classes));
  double mx = -1e300;
  for (int c = 0; c < cfg.num_classes; ++c) {
    logits[c] = w("head.bias", c, 0);
    for (int j = 0; j < H; ++j) logits[c] += w("head.weight", c, j) * last[j];
    mx = std::max(mx, logits[c]);
  }
  double s = 0;
  for (auto& v : logits) s += (v = std::exp(v - mx));
  for (auto& v : logits) v /= s;
  return logits;
}

}  // namespace

TEST(Layout, CountsAndOrder) {
  bp::ModelConfig cfg;
  const auto layout = bp::parameter_layout(cfg);
  ASSERT_EQ(layout.size(), 10u);
  EXPECT_EQ(layout[0].name, "gru.l0.weight_ih");
  EXPECT_EQ(layout[0].rows, 384);
  EXPECT_EQ(layout[0].cols, 28);
  EXPECT_EQ(layout[9].name, "head.bias");
  const std::size_t expected = 3 * 128 * (28 + 128 + 2) + 3 * 128 * (128 + 128 + 2) + 2 * 128 + 2;
  EXPECT_EQ(bp::parameter_count(cfg), expected);
  std::size_t off = 0;
  for (const auto& p : layout) {
    EXPECT_EQ(p.offset, off);
    off += p.size();
  }
}

TEST(ModelConfig, Validation) {
  auto cfg = tiny();
  cfg.hidden_dim = 0;
  EXPECT_THROW(cfg.validate(), bp::ConfigError);
  cfg = tiny();
  cfg.seq_len = 0;
  EXPECT_THROW(cfg.validate(), bp::ConfigError);
  bp::TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), bp::ConfigError);
  tc = {};
  tc.learning_rate = -1;
  EXPECT_THROW(tc.validate(), bp::ConfigError);
}

TEST(Forward, ZeroModelIsUniform) {
  Model m(tiny());
  const auto p = m.forward(random_inputs(tiny(), 5, 1));
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p.data()[i], 0.5);
}

TEST(Forward, MatchesScalarReference) {
  for (int layers : {1, 2, 3}) {
    const auto cfg = tiny(layers);
    const auto m = randomized(cfg, static_cast<std::uint64_t>(layers));
    const auto xs = random_inputs(cfg, 4, 9);
    const auto p = m.forward(xs);
    for (int b = 0; b < 4; ++b) {
      const auto ref = naive_probs(m, xs, b);
      EXPECT_NEAR(p(0, b), ref[0], 1e-12);
      EXPECT_NEAR(p(1, b), ref[1], 1e-12);
      EXPECT_NEAR(p(0, b) + p(1, b), 1.0, 1e-12);
    }
  }
}

TEST(Forward, BatchEqualsPerSampleLoop) {
  const auto cfg = tiny();
  const auto m = randomized(cfg, 4);
  const auto xs = random_inputs(cfg, 6, 2);
  const auto batch = m.forward(xs);
  for (int b = 0; b < 6; ++b) {
    std::vector<Mat> one;
    for (const auto& x : xs) one.push_back(x.col(b));
    const auto p = m.forward(one);
    EXPECT_NEAR(p(0, 0), batch(0, b), 1e-14);
    EXPECT_NEAR(p(1, 0), batch(1, b), 1e-14);
  }
}

TEST(Forward, ShapeErrors) {
  const auto cfg = tiny();
  Model m(cfg);
  auto xs = random_inputs(cfg, 2, 3);
  xs.pop_back();
  EXPECT_THROW(m.forward(xs), bp::ShapeError);
  xs = random_inputs(cfg, 2, 3);
  xs[1] = Mat::Zero(cfg.input_dim + 1, 2);
  EXPECT_THROW(m.forward(xs), bp::ShapeError);
  xs = random_inputs(cfg, 2, 3);
  xs[2] = Mat::Zero(cfg.input_dim, 3);
  EXPECT_THROW(m.forward(xs), bp::ShapeError);
  const std::vector<int> labels{0};
  EXPECT_THROW(m.loss(random_inputs(cfg, 2, 3), labels), bp::ShapeError);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (int layers : {1, 2}) {
    const auto cfg = tiny(layers);
    auto m = randomized(cfg, 10 + static_cast<std::uint64_t>(layers));
    const auto xs = random_inputs(cfg, 5, 4);
    const std::vector<int> labels{0, 1, 1, 0, 1};
    Model::Vector grad;
    const double l = m.loss_and_gradient(xs, labels, grad);
    EXPECT_NEAR(l, m.loss(xs, labels), 1e-14);
    const auto fd = bp::testing::finite_difference_gradient(
        [&](const Eigen::VectorXd& p) {
          Model probe = m;
          probe.parameters() = p;
          return probe.loss(xs, labels);
        },
        m.parameters(), 1e-6);
    ASSERT_EQ(grad.size(), fd.size());
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      EXPECT_NEAR(grad[i], fd[i], 1e-6 * std::max(1.0, std::abs(fd[i]))) << "parameter " << i;
    }
  }
}

TEST(Gradient, LossIsMeanCrossEntropy) {
  const auto cfg = tiny();
  const auto m = randomized(cfg, 5);
  const auto xs = random_inputs(cfg, 3, 6);
  const std::vector<int> labels{1, 0, 1};
  const auto p = m.forward(xs);
  const double expected = -(std::log(p(1, 0)) + std::log(p(0, 1)) + std::log(p(1, 2))) / 3.0;
  EXPECT_NEAR(m.loss(xs, labels), expected, 1e-12);
}

TEST(Adam, FirstStepsMatchHandComputation) {
  bp::TrainConfig tc;
  tc.learning_rate = 0.1;
  bp::AdamOptimizer<double> opt(2, tc);
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -2.0;
  g << 0.5, -3.0;
  opt.step(p, g);
  // With bias correction the first step is lr * g / (|g| + eps').
  EXPECT_NEAR(p[0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(p[1], -2.0 + 0.1, 1e-7);

  const double p0 = p[0];
  double m0 = 0.1 * 0.5, v0 = 0.001 * 0.25;
  g << 0.25, 0.0;
  opt.step(p, g);
  m0 = 0.9 * m0 + 0.1 * 0.25;
  v0 = 0.999 * v0 + 0.001 * 0.0625;
  const double mhat = m0 / (1 - 0.81), vhat = v0 / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], p0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
  EXPECT_EQ(opt.steps(), 2);
}

TEST(Adam, ZeroLearningRateIsNoOp) {
  bp::TrainConfig tc;
  tc.learning_rate = 0.0;
  bp::AdamOptimizer<float> opt(3, tc);
  Eigen::VectorXf p(3), g(3);
  p << 1, 2, 3;
  g << 4, 5, 6;
  const Eigen::VectorXf before = p;
  opt.step(p, g);
  EXPECT_EQ(p, before);
}

TEST(Init, DeterministicAndBounded) {
  bp::ModelConfig cfg;
  const auto a = Model::initialized(cfg, 3);
  const auto b = Model::initialized(cfg, 3);
  const auto c = Model::initialized(cfg, 4);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  const double bound = 1.0 / std::sqrt(128.0);
  EXPECT_LE(a.parameters().cwiseAbs().maxCoeff(), bound);
}
