#include "blockpred/features.hpp"

#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

std::optional<FeatureVector> FeatureCache::find(const FeatureKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FeatureCache::store(const FeatureKey& key, const FeatureVector& fv) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(key, fv);
}

std::size_t FeatureCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string format_feature_record(const FeatureKey& key, const FeatureVector& fv) {
  std::string line = key.scenario_id + ',' + std::to_string(key.seq_index) + ',';
  char hex[17];
  const auto [end, ec] = std::to_chars(hex, hex + sizeof(hex), key.pipeline_hash, 16);
  line.append(hex, end);
  line += ',' + std::to_string(fv.n_active);
  for (double v : fv.values) line += ',' + format_double(v);
  return line;
}

std::pair<FeatureKey, FeatureVector> parse_feature_record(const std::string& line) {
  std::vector<std::string_view> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(rest.substr(0, comma));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (fields.size() < 5) throw ParseError("feature record has too few fields");
  FeatureKey key;
  FeatureVector fv;
  key.scenario_id = std::string(fields[0]);
  const auto parse_u64 = [](std::string_view s, std::uint64_t& out, int base) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad integer in feature record");
  };
  parse_u64(fields[1], key.seq_index, 10);
  parse_u64(fields[2], key.pipeline_hash, 16);
  std::uint64_t n_active = 0;
  parse_u64(fields[3], n_active, 10);
  fv.n_active = n_active;
  fv.values.resize(fields.size() - 4);
  for (std::size_t i = 4; i < fields.size(); ++i) {
    const auto f = fields[i];
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), fv.values[i - 4]);
    if (ec != std::errc() || p != f.data() + f.size()) throw ParseError("bad value in feature record");
  }
  if (fv.n_active > fv.values.size()) throw ParseError("n_active exceeds vector length");
  return {std::move(key), std::move(fv)};
}

void FeatureCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto [key, fv] = parse_feature_record(line);
      store(key, fv);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

void FeatureCache::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write feature cache " + tmp);
    std::shared_lock lock(mutex_);
    for (const auto& [key, fv] : entries_) out << format_feature_record(key, fv) << '\n';
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::uint64_t hash_pipeline(const DetectorBackend& detector, const PipelineConfig& cfg) {
  std::ostringstream s;
  const auto& e = cfg.enhancement;
  s << "enh:" << to_string(e.mode) << ',' << format_double(e.brightness_threshold) << ','
    << format_double(e.gamma) << ',' << format_double(e.clip_low) << ','
    << format_double(e.clip_high);
  s << "|det:" << detector.describe() << "|classes:";
  for (int c : cfg.detector.relevant_classes) s << c << ' ';
  s << "|minconf:" << format_double(cfg.detector.min_confidence) << "|z:" << cfg.embedding_dim;
  return fnv1a64(s.str());
}

}  // namespace

FeaturePipeline::FeaturePipeline(DetectorBackend& detector, PipelineConfig cfg, FeatureCache* cache,
                                 EnhancerBackend* enhancer)
    : detector_(detector), cfg_(std::move(cfg)), cache_(cache), enhancer_(enhancer) {
  cfg_.enhancement.validate();
  validate_embedding_dim(cfg_.embedding_dim);
  if (cfg_.enhancement.mode == EnhanceMode::external && enhancer_ == nullptr) {
    throw ConfigError("enhance mode 'external' needs an enhancer backend");
  }
  hash_ = hash_pipeline(detector_, cfg_);
}

std::optional<FeatureVector> FeaturePipeline::cached(const Scenario& scenario,
                                                     std::size_t position) const {
  if (cache_ == nullptr) return std::nullopt;
  return cache_->find({scenario.scenario_id, scenario.samples.at(position).seq_index, hash_});
}

FeatureVector FeaturePipeline::compute(const Scenario& scenario, std::size_t position) {
  const auto& sample = scenario.samples.at(position);
  FrameContext frame{scenario.scenario_id, sample.seq_index, position};
  if (!detector_.needs_pixels()) {
    return features_from_detections(detect(nullptr, detector_, cfg_.detector, frame),
                                    cfg_.embedding_dim);
  }
  ImageTensor img = read_image(scenario.image_path(position));
  if (cfg_.enhancement.mode == EnhanceMode::external) {
    img = enhance_external(img, *enhancer_);
  } else {
    img = enhance(img, cfg_.enhancement);
  }
  return features_from_detections(detect(img, detector_, cfg_.detector, frame), cfg_.embedding_dim);
}

FeatureVector FeaturePipeline::frame_features(const Scenario& scenario, std::size_t position) {
  if (position >= scenario.samples.size()) {
    throw IndexError("frame position " + std::to_string(position) + " out of range for scenario '" +
                     scenario.scenario_id + "'");
  }
  const auto& sample = scenario.samples[position];
  const FeatureKey key{scenario.scenario_id, sample.seq_index, hash_};
  if (cache_ != nullptr) {
    if (auto hit = cache_->find(key)) return *hit;
  }
  FeatureVector fv;
  try {
    fv = compute(scenario, position);
  } catch (const FrameError&) {
    throw;
  } catch (const Error& e) {
    throw FrameError(e, scenario.scenario_id, sample.seq_index);
  }
  if (cache_ != nullptr) cache_->store(key, fv);
  return fv;
}

std::vector<FeatureVector> FeaturePipeline::sequence_features(const Scenario& scenario,
                                                              const SequenceSample& seq) {
  if (seq.scenario_id != scenario.scenario_id) {
    throw ValidationError("sequence from scenario '" + seq.scenario_id + "' applied to '" +
                          scenario.scenario_id + "'");
  }
  const auto first = seq.first_index();
  if (first < 0 || seq.anchor_index >= static_cast<std::int64_t>(scenario.samples.size())) {
    throw IndexError("window at anchor " + std::to_string(seq.anchor_index) +
                     " falls outside scenario '" + scenario.scenario_id + "'");
  }
  std::vector<FeatureVector> out;
  out.reserve(static_cast<std::size_t>(seq.r));
  for (auto p = first; p <= seq.anchor_index; ++p) {
    out.push_back(frame_features(scenario, static_cast<std::size_t>(p)));
  }
  return out;
}

std::vector<FeatureVector> assemble_sequence_features(const Scenario& scenario,
                                                      const SequenceSample& seq,
                                                      FeaturePipeline& pipeline) {
  return pipeline.sequence_features(scenario, seq);
}

}  // namespace blockpred
