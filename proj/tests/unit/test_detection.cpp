#include <gtest/gtest.h>

#include "blockpred/detection.hpp"
#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"
#include "oracles.hpp"

namespace bp = blockpred;

namespace {

class FixedDetector : public bp::DetectorBackend {
 public:
  explicit FixedDetector(std::vector<bp::BoundingBox> boxes) : boxes_(std::move(boxes)) {}
  std::vector<bp::BoundingBox> raw_detect(const bp::ImageTensor*, const bp::FrameContext&) override {
    return boxes_;
  }
  bool needs_pixels() const override { return false; }
  std::string describe() const override { return "fixed"; }

 private:
  std::vector<bp::BoundingBox> boxes_;
};

bp::BoundingBox box(double x1, double y1, double x2, double y2, int cls = 2, double conf = 1.0) {
  return {x1, y1, x2, y2, cls, conf};
}

std::vector<bp::BoundingBox> random_boxes(bp::Rng& rng, std::size_t n) {
  std::vector<bp::BoundingBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.uniform01() * 0.5, y1 = rng.uniform01() * 0.5;
    // Coarse confidences force ties on the first key.
    const double conf = 0.5 + 0.1 * static_cast<double>(rng.index(5));
    out.push_back(box(x1, y1, x1 + rng.uniform01() * 0.5, y1 + rng.uniform01() * 0.5, 2, conf));
  }
  return out;
}

}  // namespace

TEST(Features, TwoBoxesPadded) {
  bp::DetectionResult det;
  det.boxes = {box(0.1, 0.2, 0.3, 0.4, 2, 0.9), box(0.5, 0.5, 0.6, 0.7, 2, 0.8)};
  const auto fv = bp::features_from_detections(det, 12);
  const std::vector<double> expected{0.1, 0.2, 0.3, 0.4, 0.5, 0.5, 0.6, 0.7, 0, 0, 0, 0};
  EXPECT_EQ(fv.values, expected);
  EXPECT_EQ(fv.n_active, 8u);
}

TEST(Features, EmptyIsAllZeros) {
  const auto fv = bp::features_from_detections({}, 28);
  EXPECT_EQ(fv.values, std::vector<double>(28, 0.0));
  EXPECT_EQ(fv.n_active, 0u);
}

TEST(Features, KeepsTopRankedBoxes) {
  bp::DetectionResult det;
  for (int i = 0; i < 9; ++i) det.boxes.push_back(box(0.0, 0.0, 0.1, 0.1, 2, 0.1 * (i + 1)));
  const auto fv = bp::features_from_detections(det, 28);
  EXPECT_EQ(fv.n_active, 28u);
  EXPECT_EQ(fv.values, bp::testing::naive_features(det.boxes, 28));
}

TEST(Features, MatchesOracleOnRandomSets) {
  bp::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    bp::DetectionResult det;
    det.boxes = random_boxes(rng, rng.index(12));
    for (int z : {4, 12, 28, 40}) {
      ASSERT_EQ(bp::features_from_detections(det, z).values, bp::testing::naive_features(det.boxes, z));
    }
  }
}

TEST(Features, InvariantToInputOrder) {
  bp::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    bp::DetectionResult det;
    det.boxes = random_boxes(rng, 8);
    // Distinct areas make the ranking total, so any permutation gives the same vector.
    for (std::size_t i = 0; i < det.boxes.size(); ++i) det.boxes[i].x2 = det.boxes[i].x1 + 0.01 * (i + 1);
    const auto ref = bp::features_from_detections(det, 28);
    auto shuffled = det;
    rng.shuffle(shuffled.boxes.begin(), shuffled.boxes.end());
    EXPECT_EQ(bp::features_from_detections(shuffled, 28), ref);
  }
}

TEST(Features, EmbeddingDimMustBeMultipleOfFour) {
  EXPECT_THROW(bp::validate_embedding_dim(30), bp::ConfigError);
  EXPECT_THROW(bp::validate_embedding_dim(0), bp::ConfigError);
  EXPECT_NO_THROW(bp::validate_embedding_dim(28));
  EXPECT_THROW(bp::features_from_detections({}, 30), bp::ConfigError);
}

TEST(SortBoxes, RankingKeys) {
  std::vector<bp::BoundingBox> boxes{
      box(0.5, 0, 0.6, 0.1, 2, 0.7),  // small
      box(0.2, 0, 0.4, 0.2, 2, 0.7),  // larger, same confidence
      box(0.1, 0, 0.2, 0.1, 2, 0.7),  // same area as the first, smaller x1
      box(0.0, 0, 0.1, 0.1, 2, 0.9),
  };
  bp::sort_boxes(boxes);
  EXPECT_DOUBLE_EQ(boxes[0].confidence, 0.9);
  EXPECT_DOUBLE_EQ(boxes[1].x1, 0.2);
  EXPECT_DOUBLE_EQ(boxes[2].x1, 0.1);
  EXPECT_DOUBLE_EQ(boxes[3].x1, 0.5);
}

TEST(Detect, FiltersClassAndConfidence) {
  FixedDetector backend({box(0.1, 0.1, 0.2, 0.2, 2, 0.9), box(0.1, 0.1, 0.2, 0.2, 9, 0.99),
                         box(0.1, 0.1, 0.2, 0.2, 0, 0.4), box(0.3, 0.1, 0.9, 0.2, 7, 0.5)});
  const auto det = bp::detect(nullptr, backend, {});
  ASSERT_EQ(det.boxes.size(), 2u);
  EXPECT_EQ(det.boxes[0].class_id, 2);
  EXPECT_EQ(det.boxes[1].class_id, 7);

  bp::DetectorOptions all;
  all.relevant_classes = {0, 2, 7, 9};
  all.min_confidence = 0.0;
  EXPECT_EQ(bp::detect(nullptr, backend, all).boxes.size(), 4u);
}

TEST(Detect, InvalidBoxIsBackendError) {
  FixedDetector backend({box(0.3, 0.1, 0.2, 0.2, 2, 0.9)});
  EXPECT_THROW(bp::detect(nullptr, backend, {}), bp::BackendError);
}

TEST(DetectionsJson, RoundTrip) {
  bp::Rng rng(5);
  const auto boxes = random_boxes(rng, 6);
  EXPECT_EQ(bp::parse_detections_json(bp::detections_to_json(boxes)), boxes);
  EXPECT_TRUE(bp::parse_detections_json("[]").empty());
}

TEST(DetectionsJson, ClampsTinyOvershootRejectsRest) {
  const auto ok = bp::parse_detections_json(
      R"([{"x1":-1e-9,"y1":0,"x2":1.0000001,"y2":0.5,"class_id":2,"confidence":0.9}])");
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].x1, 0.0);
  EXPECT_EQ(ok[0].x2, 1.0);
  EXPECT_THROW(bp::parse_detections_json(R"([{"x1":-0.1,"y1":0,"x2":0.5,"y2":0.5,"class_id":2,"confidence":0.9}])"),
               bp::BackendError);
  EXPECT_THROW(bp::parse_detections_json(R"([{"x1":0.6,"y1":0,"x2":0.5,"y2":0.5,"class_id":2,"confidence":0.9}])"),
               bp::BackendError);
  EXPECT_THROW(bp::parse_detections_json(R"([{"x1":0.1,"y1":0,"x2":0.5,"class_id":2,"confidence":0.9}])"),
               bp::BackendError);
  EXPECT_THROW(bp::parse_detections_json("{"), bp::BackendError);
  EXPECT_THROW(bp::parse_detections_json(R"({"boxes":[]})"), bp::BackendError);
}
