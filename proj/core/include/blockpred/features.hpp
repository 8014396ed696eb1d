#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "blockpred/coredata.hpp"
#include "blockpred/detection.hpp"
#include "blockpred/enhancement.hpp"
#include "blockpred/windowing.hpp"

namespace blockpred {

struct FeatureKey {
  std::string scenario_id;
  std::uint64_t seq_index = 0;
  std::uint64_t pipeline_hash = 0;

  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

/// Memo of per-frame feature vectors shared across overlapping windows.
/// Safe for concurrent readers and writers.
///
/// File format, one record per line:
///   scenario_id,seq_index,pipeline_hash(hex),n_active,v_0,...,v_{Z-1}
/// Values use shortest round-trip decimal text, so a reloaded cache is
/// bit-identical to the one written.
class FeatureCache {
 public:
  std::optional<FeatureVector> find(const FeatureKey& key) const;
  void store(const FeatureKey& key, const FeatureVector& fv);
  std::size_t size() const;

  /// Merges records from `path` (missing file is fine). Throws ParseError.
  void load(const std::filesystem::path& path);
  /// Writes every record, sorted by key.
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<FeatureKey, FeatureVector> entries_;
};

std::string format_feature_record(const FeatureKey& key, const FeatureVector& fv);
std::pair<FeatureKey, FeatureVector> parse_feature_record(const std::string& line);

struct PipelineConfig {
  EnhancementConfig enhancement;
  DetectorOptions detector;
  int embedding_dim = 28;
};

/// enhance -> detect -> features for single frames, memoized in a cache keyed
/// by (scenario_id, seq_index, config hash).
class FeaturePipeline {
 public:
  FeaturePipeline(DetectorBackend& detector, PipelineConfig cfg, FeatureCache* cache = nullptr,
                  EnhancerBackend* enhancer = nullptr);

  std::uint64_t config_hash() const { return hash_; }
  const PipelineConfig& config() const { return cfg_; }

  /// Features of scenario.samples[position]. Errors are rethrown as FrameError.
  FeatureVector frame_features(const Scenario& scenario, std::size_t position);

  /// The r per-frame vectors of one window, oldest first.
  std::vector<FeatureVector> sequence_features(const Scenario& scenario, const SequenceSample& seq);

  /// Cache lookup only; nullopt when the frame has not been extracted.
  std::optional<FeatureVector> cached(const Scenario& scenario, std::size_t position) const;

 private:
  FeatureVector compute(const Scenario& scenario, std::size_t position);

  DetectorBackend& detector_;
  PipelineConfig cfg_;
  FeatureCache* cache_;
  EnhancerBackend* enhancer_;
  std::uint64_t hash_;
};

/// Free-function form of FeaturePipeline::sequence_features.
std::vector<FeatureVector> assemble_sequence_features(const Scenario& scenario,
                                                      const SequenceSample& seq,
                                                      FeaturePipeline& pipeline);

}  // namespace blockpred
