#pragma once

// Independent reference implementations the tests compare the library against.
// They are written for clarity, not speed, and share no code with core/.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "blockpred/detection.hpp"
#include "blockpred/predictor.hpp"
#include "blockpred/synthsim.hpp"

namespace blockpred::testing {

struct NaiveWindow {
  std::int64_t anchor = 0;
  int label = 0;
};

/// Double loop over anchors and future offsets.
std::vector<NaiveWindow> naive_windows(const std::vector<int>& labels, int r, int r_prime, int stride);

/// Ranks with an insertion sort on (confidence desc, area desc, x1 asc), then
/// concatenates, truncates and pads.
std::vector<double> naive_features(const std::vector<BoundingBox>& boxes, int z);

/// Steady-state probability that at least one object overlaps the corridor:
/// 1 - exp(-rate * E[dwell * 1{vertical overlap}]), integrated numerically.
double analytic_blocked_fraction(const SceneConfig& cfg);

/// Closed-form blocked frames for one object: frames i whose time i/fs falls
/// strictly inside the corridor crossing interval.
std::vector<std::size_t> crossing_frames(const MovingObject& obj, const Rect& corridor,
                                         double sample_rate_hz, std::size_t n_frames);

/// Central finite differences of `loss` at `params` with step h.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& loss,
                                           const Eigen::VectorXd& params, double h);

struct NaiveCounts {
  std::uint64_t tn = 0, fp = 0, fn = 0, tp = 0, correct = 0;
};
NaiveCounts naive_counts(const std::vector<int>& preds, const std::vector<int>& truths);

}  // namespace blockpred::testing
