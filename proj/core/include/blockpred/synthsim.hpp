#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blockpred/coredata.hpp"
#include "blockpred/detection.hpp"
#include "blockpred/image.hpp"

namespace blockpred {

/// Axis-aligned region in normalized, bottom-left-origin coordinates.
struct Rect {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

/// Positive-area overlap (touching edges do not count).
inline bool intersects(const Rect& a, const Rect& b) {
  return a.x1 < b.x2 && b.x1 < a.x2 && a.y1 < b.y2 && b.y1 < a.y2;
}

struct SceneConfig {
  std::string scenario_id = "sim";
  int image_width = 64;
  int image_height = 48;
  /// Image-plane projection of the transmitter-receiver LOS path.
  Rect los_corridor{0.4, 0.1, 0.6, 0.9};
  double object_rate = 0.3;  // Poisson arrivals per second
  double speed_min = 0.1;    // normalized widths per second
  double speed_max = 0.3;
  double width_min = 0.12;
  double width_max = 0.3;
  double height_min = 0.1;
  double height_max = 0.3;
  double night_fraction = 0.0;  // trailing share of frames rendered as night
  double night_noise_std = 0.02;
  double duration_s = 120.0;
  double sample_rate_hz = 10.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  std::size_t frame_count() const;
};

/// Rectangle moving horizontally at constant velocity. Enters from the left
/// edge when velocity > 0 and from the right edge otherwise.
struct MovingObject {
  double spawn_time = 0.0;
  double x_start = 0.0;   // x1 at spawn_time
  double velocity = 0.0;  // signed, normalized units per second
  double y1 = 0.0;
  double width = 0.1;
  double height = 0.1;
  int class_id = 2;

  /// Unclipped box at time t.
  Rect box_at(double t) const;
  /// Visible iff spawned and horizontally overlapping the frame.
  bool visible_at(double t) const;
};

struct FrameTruth {
  std::vector<BoundingBox> boxes;  // frame-clipped, confidence 1
  bool occluded = false;
  bool night = false;
};

struct SimScenario {
  Scenario scenario;
  SceneConfig config;
  std::vector<MovingObject> objects;
  std::vector<FrameTruth> frames;
};

/// Poisson traffic under cfg.seed. Arrivals start before t = 0 so the first
/// frame already sees steady-state traffic.
SimScenario simulate(const SceneConfig& cfg);

/// Renders labels and ground truth for an explicit object list.
SimScenario simulate_with_objects(const SceneConfig& cfg, std::vector<MovingObject> objects);

ImageTensor render_frame(const SimScenario& sim, std::size_t frame);

/// Ground-truth boxes. Throws IndexError.
DetectionResult oracle_detect(const SimScenario& sim, std::size_t frame);

struct DetectionNoise {
  double jitter_std = 0.0;           // Gaussian, per coordinate
  double miss_prob = 0.0;            // per true box
  double false_positive_rate = 0.0;  // expected spurious boxes per frame
};

/// Perturbs ground-truth boxes. Draws come from a stream keyed by
/// (seed, scenario id, seq_index), so results are independent of call order.
std::vector<BoundingBox> perturb_boxes(const std::vector<BoundingBox>& truth,
                                       const DetectionNoise& noise, std::uint64_t stream_seed);
std::uint64_t frame_noise_seed(std::uint64_t seed, const std::string& scenario_id,
                               std::uint64_t seq_index);

DetectionResult noisy_detect(const SimScenario& sim, std::size_t frame, const DetectionNoise& noise,
                             std::uint64_t seed);

/// Writes manifest.csv, frames/NNNNNN.ppm and ground_truth.jsonl under dir and
/// points the scenario's image refs at the frames.
void write_sim_scenario(SimScenario& sim, const std::filesystem::path& dir);

/// Per-frame ground truth for several scenarios, keyed by seq_index.
class GroundTruthStore {
 public:
  void add(const SimScenario& sim);
  /// Reads ground_truth.jsonl. Throws IoError / ParseError.
  void load_jsonl(const std::filesystem::path& path);
  /// Throws IndexError when the frame is unknown.
  const FrameTruth& at(const std::string& scenario_id, std::uint64_t seq_index) const;
  bool empty() const { return frames_.empty(); }

 private:
  std::map<std::string, std::map<std::uint64_t, FrameTruth>> frames_;
};

void write_ground_truth_jsonl(const SimScenario& sim, const std::filesystem::path& path);

/// Detector backend answering from simulator ground truth.
class OracleDetector final : public DetectorBackend {
 public:
  explicit OracleDetector(const GroundTruthStore& truth) : truth_(truth) {}
  std::vector<BoundingBox> raw_detect(const ImageTensor* img, const FrameContext& frame) override;
  bool needs_pixels() const override { return false; }
  std::string describe() const override { return "oracle"; }

 private:
  const GroundTruthStore& truth_;
};

class NoisyDetector final : public DetectorBackend {
 public:
  NoisyDetector(const GroundTruthStore& truth, DetectionNoise noise, std::uint64_t seed)
      : truth_(truth), noise_(noise), seed_(seed) {}
  std::vector<BoundingBox> raw_detect(const ImageTensor* img, const FrameContext& frame) override;
  bool needs_pixels() const override { return false; }
  std::string describe() const override;

 private:
  const GroundTruthStore& truth_;
  DetectionNoise noise_;
  std::uint64_t seed_;
};

}  // namespace blockpred
