#pragma once

#include <chrono>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "blockpred/image.hpp"

namespace blockpred {

/// Axis-aligned box in normalized coordinates with the origin at the image's
/// bottom-left corner: (x1, y1) bottom-left, (x2, y2) top-right.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  int class_id = 0;
  double confidence = 1.0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const {
    return 0.0 <= x1 && x1 <= x2 && x2 <= 1.0 && 0.0 <= y1 && y1 <= y2 && y2 <= 1.0 &&
           confidence >= 0.0 && confidence <= 1.0;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct DetectionResult {
  std::vector<BoundingBox> boxes;
  int image_width = 0;
  int image_height = 0;
};

/// Fixed-length detection embedding. Only the first n_active entries carry
/// box coordinates; the rest are zero padding.
struct FeatureVector {
  std::vector<double> values;
  std::size_t n_active = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// COCO ids of person, bicycle, car, motorcycle, bus and truck.
inline const std::set<int> kRoadBlockerClasses{0, 1, 2, 3, 5, 7};

struct DetectorOptions {
  std::set<int> relevant_classes = kRoadBlockerClasses;
  double min_confidence = 0.5;
};

/// Identity of the frame being processed. Lets ground-truth backends look up
/// their answer without touching pixels.
struct FrameContext {
  std::string scenario_id;
  std::uint64_t seq_index = 0;
  std::size_t position = 0;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  /// Unfiltered detections. `img` may be null when needs_pixels() is false.
  virtual std::vector<BoundingBox> raw_detect(const ImageTensor* img, const FrameContext& frame) = 0;
  virtual bool needs_pixels() const { return true; }
  /// Stable description of the backend and its settings; feeds the cache key.
  virtual std::string describe() const = 0;
};

/// Detection ranking: confidence descending, then area descending, then x1
/// ascending. Stable.
void sort_boxes(std::vector<BoundingBox>& boxes);

/// Runs the backend, keeps relevant classes at or above min_confidence and
/// sorts. Boxes violating the coordinate invariants raise BackendError.
DetectionResult detect(const ImageTensor* img, DetectorBackend& backend,
                       const DetectorOptions& options, const FrameContext& frame = {});
inline DetectionResult detect(const ImageTensor& img, DetectorBackend& backend,
                              const DetectorOptions& options, const FrameContext& frame = {}) {
  return detect(&img, backend, options, frame);
}

/// Checks the embedding length: positive multiple of 4. Throws ConfigError.
void validate_embedding_dim(int z);

/// Concatenates [x1,y1,x2,y2] of the boxes in ranking order. Keeps at most
/// z/4 boxes and zero-pads to length z.
FeatureVector features_from_detections(const DetectionResult& det, int z);

/// Parses the detector wire format: a JSON array of
/// {x1,y1,x2,y2,class_id,confidence}, normalized, bottom-left origin.
/// Coordinates within 1e-6 of the unit interval are clamped; anything else
/// invalid raises BackendError.
std::vector<BoundingBox> parse_detections_json(const std::string& text);
std::string detections_to_json(const std::vector<BoundingBox>& boxes);

/// POST <url>/detect with a binary PPM body; the response is the JSON array.
class HttpDetector final : public DetectorBackend {
 public:
  HttpDetector(std::string url, std::chrono::milliseconds timeout);
  std::vector<BoundingBox> raw_detect(const ImageTensor* img, const FrameContext& frame) override;
  std::string describe() const override { return "http:" + url_; }

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

/// `<command>` reads a binary PPM on stdin and prints the JSON array.
class SubprocessDetector final : public DetectorBackend {
 public:
  SubprocessDetector(std::string command, std::chrono::milliseconds timeout);
  std::vector<BoundingBox> raw_detect(const ImageTensor* img, const FrameContext& frame) override;
  std::string describe() const override { return "subprocess:" + command_; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

}  // namespace blockpred
