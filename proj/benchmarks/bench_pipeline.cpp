#include <benchmark/benchmark.h>

#include "blockpred/detection.hpp"
#include "blockpred/enhancement.hpp"
#include "blockpred/predictor.hpp"
#include "blockpred/rng.hpp"
#include "blockpred/synthsim.hpp"
#include "blockpred/windowing.hpp"

namespace bp = blockpred;

namespace {

template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> random_batch(const bp::ModelConfig& cfg,
                                                                                int batch) {
  bp::Rng rng(1);
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> xs;
  for (int t = 0; t < cfg.seq_len; ++t) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> x(cfg.input_dim, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<Scalar>(rng.uniform01());
    xs.push_back(x);
  }
  return xs;
}

void BM_Forward(benchmark::State& state) {
  const bp::ModelConfig cfg;
  const auto model = bp::GruClassifier<double>::initialized(cfg, 1);
  const auto xs = random_batch<double>(cfg, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(128)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  const bp::ModelConfig cfg;
  auto model = bp::GruClassifier<float>::initialized(cfg, 1);
  bp::AdamOptimizer<float> adam(static_cast<std::size_t>(model.parameters().size()), {});
  const auto xs = random_batch<float>(cfg, 128);
  std::vector<int> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  Eigen::VectorXf grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.loss_and_gradient(xs, labels, grad));
    adam.step(model.parameters(), grad);
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TrainStep);

void BM_BuildWindows(benchmark::State& state) {
  bp::Rng rng(2);
  std::vector<bp::LinkStatus> labels(static_cast<std::size_t>(state.range(0)));
  for (auto& l : labels) l = rng.bernoulli(0.3) ? bp::LinkStatus::blocked : bp::LinkStatus::los;
  const bp::WindowConfig cfg{8, 10, 1};
  for (auto _ : state) benchmark::DoNotOptimize(bp::build_windows(labels, "s", cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildWindows)->Arg(12000);

void BM_Features(benchmark::State& state) {
  bp::Rng rng(3);
  bp::DetectionResult det;
  for (int i = 0; i < state.range(0); ++i) {
    const double x1 = rng.uniform(0, 0.5), y1 = rng.uniform(0, 0.5);
    det.boxes.push_back({x1, y1, x1 + 0.2, y1 + 0.3, 2, rng.uniform(0.5, 1.0)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bp::features_from_detections(det, 28));
}
BENCHMARK(BM_Features)->Arg(3)->Arg(20);

void BM_Enhance(benchmark::State& state) {
  bp::Rng rng(4);
  bp::ImageTensor img(static_cast<int>(state.range(0)), static_cast<int>(state.range(0) * 3 / 4));
  for (auto& v : img.data) v = static_cast<float>(0.15 * rng.uniform01());
  for (auto _ : state) benchmark::DoNotOptimize(bp::enhance(img, {}));
}
BENCHMARK(BM_Enhance)->Arg(64)->Arg(640);

void BM_SimulateAndRender(benchmark::State& state) {
  bp::SceneConfig cfg;
  cfg.duration_s = 60;
  for (auto _ : state) {
    const auto sim = bp::simulate(cfg);
    benchmark::DoNotOptimize(bp::render_frame(sim, 300));
  }
}
BENCHMARK(BM_SimulateAndRender);

}  // namespace

BENCHMARK_MAIN();
