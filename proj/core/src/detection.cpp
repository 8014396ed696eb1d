#include "blockpred/detection.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "blockpred/errors.hpp"
#include "blockpred/subprocess.hpp"

namespace blockpred {

void sort_boxes(std::vector<BoundingBox>& boxes) {
  std::stable_sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    const double area_a = a.area(), area_b = b.area();
    if (area_a != area_b) return area_a > area_b;
    return a.x1 < b.x1;
  });
}

DetectionResult detect(const ImageTensor* img, DetectorBackend& backend,
                       const DetectorOptions& options, const FrameContext& frame) {
  if (backend.needs_pixels() && img == nullptr) {
    throw ShapeError("detector " + backend.describe() + " needs image pixels");
  }
  if (img != nullptr && (img->width <= 0 || img->height <= 0 ||
                         img->data.size() != img->pixel_count() * ImageTensor::channels)) {
    throw ShapeError("malformed image passed to detector");
  }
  DetectionResult result;
  if (img != nullptr) {
    result.image_width = img->width;
    result.image_height = img->height;
  }
  for (const auto& box : backend.raw_detect(img, frame)) {
    if (!box.valid()) {
      throw BackendError("detector " + backend.describe() + " returned an invalid box");
    }
    if (box.confidence < options.min_confidence) continue;
    if (!options.relevant_classes.empty() && !options.relevant_classes.contains(box.class_id)) {
      continue;
    }
    result.boxes.push_back(box);
  }
  sort_boxes(result.boxes);
  return result;
}

void validate_embedding_dim(int z) {
  if (z < 4 || z % 4 != 0) {
    throw ConfigError("embedding dimension Z=" + std::to_string(z) +
                      " must be a positive multiple of 4 (4 coordinates per box)");
  }
}

FeatureVector features_from_detections(const DetectionResult& det, int z) {
  validate_embedding_dim(z);
  FeatureVector fv;
  fv.values.assign(static_cast<std::size_t>(z), 0.0);
  const std::size_t max_boxes = static_cast<std::size_t>(z) / 4;
  std::vector<BoundingBox> boxes = det.boxes;
  sort_boxes(boxes);
  const std::size_t kept = std::min(boxes.size(), max_boxes);
  for (std::size_t i = 0; i < kept; ++i) {
    fv.values[4 * i + 0] = boxes[i].x1;
    fv.values[4 * i + 1] = boxes[i].y1;
    fv.values[4 * i + 2] = boxes[i].x2;
    fv.values[4 * i + 3] = boxes[i].y2;
  }
  fv.n_active = 4 * kept;
  return fv;
}

std::vector<BoundingBox> parse_detections_json(const std::string& text) {
  constexpr double tol = 1e-6;
  std::vector<BoundingBox> boxes;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw BackendError("detector response is not a JSON array");
    for (const auto& item : j) {
      BoundingBox b;
      b.x1 = item.at("x1").get<double>();
      b.y1 = item.at("y1").get<double>();
      b.x2 = item.at("x2").get<double>();
      b.y2 = item.at("y2").get<double>();
      b.class_id = item.at("class_id").get<int>();
      b.confidence = item.at("confidence").get<double>();
      for (double* v : {&b.x1, &b.y1, &b.x2, &b.y2, &b.confidence}) {
        if (!std::isfinite(*v) || *v < -tol || *v > 1.0 + tol) {
          throw BackendError("detector value outside [0,1]");
        }
        *v = std::clamp(*v, 0.0, 1.0);
      }
      if (b.x1 > b.x2 || b.y1 > b.y2) throw BackendError("detector box corners out of order");
      boxes.push_back(b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("bad detector response: ") + e.what());
  }
  return boxes;
}

std::string detections_to_json(const std::vector<BoundingBox>& boxes) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& b : boxes) {
    nlohmann::ordered_json o;
    o["x1"] = b.x1;
    o["y1"] = b.y1;
    o["x2"] = b.x2;
    o["y2"] = b.y2;
    o["class_id"] = b.class_id;
    o["confidence"] = b.confidence;
    arr.push_back(std::move(o));
  }
  return arr.dump();
}

HttpDetector::HttpDetector(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

std::vector<BoundingBox> HttpDetector::raw_detect(const ImageTensor* img, const FrameContext&) {
  const auto ep = parse_http_url(url_);
  return parse_detections_json(
      http_post(ep, "/detect", encode_ppm(*img), "image/x-portable-pixmap", timeout_));
}

SubprocessDetector::SubprocessDetector(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

std::vector<BoundingBox> SubprocessDetector::raw_detect(const ImageTensor* img, const FrameContext&) {
  return parse_detections_json(run_subprocess(split_command(command_), encode_ppm(*img), timeout_));
}

}  // namespace blockpred
