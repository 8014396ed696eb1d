#include "blockpred/synthsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "blockpred/errors.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {
namespace {

constexpr int kObjectClasses[] = {0, 2, 5, 7};  // person, car, bus, truck

std::array<float, 3> class_color(int class_id) {
  switch (class_id) {
    case 0: return {0.85f, 0.25f, 0.25f};
    case 2: return {0.2f, 0.4f, 0.9f};
    case 5: return {0.95f, 0.8f, 0.2f};
    case 7: return {0.95f, 0.95f, 0.95f};
    default: return {0.6f, 0.3f, 0.7f};
  }
}

bool in_unit(const Rect& r) {
  return 0.0 <= r.x1 && r.x1 < r.x2 && r.x2 <= 1.0 && 0.0 <= r.y1 && r.y1 < r.y2 && r.y2 <= 1.0;
}

double frame_time(const SceneConfig& cfg, std::size_t i) {
  return static_cast<double>(i) / cfg.sample_rate_hz;
}

}  // namespace

void SceneConfig::validate() const {
  if (image_width <= 0 || image_height <= 0) throw ConfigError("image size must be positive");
  if (!in_unit(los_corridor)) throw ConfigError("los_corridor must be a non-empty region of [0,1]^2");
  if (object_rate < 0.0) throw ConfigError("object_rate must be >= 0");
  if (!(speed_min > 0.0 && speed_min <= speed_max)) throw ConfigError("invalid speed range");
  if (!(width_min > 0.0 && width_min <= width_max && width_max < 1.0)) {
    throw ConfigError("invalid width range");
  }
  if (!(height_min > 0.0 && height_min <= height_max && height_max < 1.0)) {
    throw ConfigError("invalid height range");
  }
  if (night_fraction < 0.0 || night_fraction > 1.0) throw ConfigError("night_fraction must be in [0,1]");
  if (night_noise_std < 0.0) throw ConfigError("night_noise_std must be >= 0");
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be > 0");
}

std::size_t SceneConfig::frame_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

Rect MovingObject::box_at(double t) const {
  const double x1 = x_start + velocity * (t - spawn_time);
  return {x1, y1, x1 + width, y1 + height};
}

bool MovingObject::visible_at(double t) const {
  if (t < spawn_time) return false;
  const Rect b = box_at(t);
  return b.x1 < 1.0 && b.x2 > 0.0;
}

SimScenario simulate_with_objects(const SceneConfig& cfg, std::vector<MovingObject> objects) {
  cfg.validate();
  SimScenario sim;
  sim.config = cfg;
  sim.objects = std::move(objects);
  const std::size_t n = cfg.frame_count();
  const auto night_start =
      static_cast<std::size_t>(std::llround((1.0 - cfg.night_fraction) * static_cast<double>(n)));

  auto& sc = sim.scenario;
  sc.scenario_id = cfg.scenario_id;
  sc.sample_rate_hz = cfg.sample_rate_hz;
  sc.time_of_day = cfg.night_fraction <= 0.0   ? TimeOfDay::day
                   : cfg.night_fraction >= 1.0 ? TimeOfDay::night
                                               : TimeOfDay::mixed;
  sc.samples.reserve(n);
  sim.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = frame_time(cfg, i);
    FrameTruth ft;
    ft.night = i >= night_start;
    for (const auto& obj : sim.objects) {
      if (!obj.visible_at(t)) continue;
      const Rect b = obj.box_at(t);
      const Rect clipped{std::max(0.0, b.x1), b.y1, std::min(1.0, b.x2), b.y2};
      ft.boxes.push_back({clipped.x1, clipped.y1, clipped.x2, clipped.y2, obj.class_id, 1.0});
      if (intersects(clipped, cfg.los_corridor)) ft.occluded = true;
    }
    sort_boxes(ft.boxes);

    Sample s;
    s.scenario_id = cfg.scenario_id;
    s.seq_index = i;
    s.timestamp = t;
    char ref[32];
    std::snprintf(ref, sizeof(ref), "frames/%06zu.ppm", i);
    s.image_ref = ref;
    s.link_status = ft.occluded ? LinkStatus::blocked : LinkStatus::los;
    sc.samples.push_back(std::move(s));
    sim.frames.push_back(std::move(ft));
  }
  return sim;
}

SimScenario simulate(const SceneConfig& cfg) {
  cfg.validate();
  // Warm-up long enough for the slowest, widest object to cross the frame.
  const double warmup = (1.0 + cfg.width_max) / cfg.speed_min;
  const double end = cfg.duration_s;
  std::vector<MovingObject> objects;
  if (cfg.object_rate > 0.0) {
    Rng arrivals(derive_seed(cfg.seed, "arrivals"));
    const std::uint64_t object_seed = derive_seed(cfg.seed, "objects");
    double t = -warmup;
    for (std::uint64_t k = 0;; ++k) {
      t += arrivals.exponential(cfg.object_rate);
      if (t >= end) break;
      // Each object draws from its own stream.
      Rng rng(derive_seed(object_seed, k));
      MovingObject obj;
      obj.spawn_time = t;
      obj.width = rng.uniform(cfg.width_min, cfg.width_max);
      obj.height = rng.uniform(cfg.height_min, cfg.height_max);
      obj.y1 = rng.uniform(0.0, 1.0 - obj.height);
      const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
      const bool rightward = rng.bernoulli(0.5);
      obj.velocity = rightward ? speed : -speed;
      obj.x_start = rightward ? -obj.width : 1.0;
      obj.class_id = kObjectClasses[rng.index(std::size(kObjectClasses))];
      objects.push_back(obj);
    }
  }
  return simulate_with_objects(cfg, std::move(objects));
}

ImageTensor render_frame(const SimScenario& sim, std::size_t frame) {
  if (frame >= sim.frames.size()) throw IndexError("frame " + std::to_string(frame) + " out of range");
  const auto& cfg = sim.config;
  const int w = cfg.image_width, h = cfg.image_height;
  ImageTensor img(w, h);
  for (int y = 0; y < h; ++y) {
    const double yn = 1.0 - (y + 0.5) / h;  // bottom-left origin
    const std::array<float, 3> bg = yn > 0.8 ? std::array<float, 3>{0.55f, 0.7f, 0.9f}
                                             : std::array<float, 3>{0.42f, 0.42f, 0.44f};
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = bg[static_cast<std::size_t>(c)];
    }
  }
  const double t = frame_time(cfg, frame);
  for (const auto& obj : sim.objects) {
    if (!obj.visible_at(t)) continue;
    const Rect b = obj.box_at(t);
    const auto color = class_color(obj.class_id);
    for (int y = 0; y < h; ++y) {
      const double yn = 1.0 - (y + 0.5) / h;
      if (yn < b.y1 || yn >= b.y2) continue;
      for (int x = 0; x < w; ++x) {
        const double xn = (x + 0.5) / w;
        if (xn < b.x1 || xn >= b.x2) continue;
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[static_cast<std::size_t>(c)];
      }
    }
  }
  if (sim.frames[frame].night) {
    Rng rng(derive_seed(derive_seed(cfg.seed, "night"), frame));
    for (auto& v : img.data) {
      const double dark = 0.15 * v + rng.normal(0.0, cfg.night_noise_std);
      v = static_cast<float>(std::clamp(dark, 0.0, 1.0));
    }
  }
  return img;
}

DetectionResult oracle_detect(const SimScenario& sim, std::size_t frame) {
  if (frame >= sim.frames.size()) throw IndexError("frame " + std::to_string(frame) + " out of range");
  DetectionResult det;
  det.boxes = sim.frames[frame].boxes;
  det.image_width = sim.config.image_width;
  det.image_height = sim.config.image_height;
  return det;
}

std::uint64_t frame_noise_seed(std::uint64_t seed, const std::string& scenario_id,
                               std::uint64_t seq_index) {
  return derive_seed(derive_seed(seed, scenario_id), seq_index);
}

std::vector<BoundingBox> perturb_boxes(const std::vector<BoundingBox>& truth,
                                       const DetectionNoise& noise, std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  std::vector<BoundingBox> out;
  for (const auto& b : truth) {
    if (rng.bernoulli(noise.miss_prob)) continue;
    BoundingBox j = b;
    if (noise.jitter_std > 0.0) {
      for (double* v : {&j.x1, &j.y1, &j.x2, &j.y2}) {
        *v = std::clamp(*v + rng.normal(0.0, noise.jitter_std), 0.0, 1.0);
      }
      if (j.x1 > j.x2) std::swap(j.x1, j.x2);
      if (j.y1 > j.y2) std::swap(j.y1, j.y2);
    }
    out.push_back(j);
  }
  const auto spurious = rng.poisson(noise.false_positive_rate);
  for (std::uint64_t k = 0; k < spurious; ++k) {
    BoundingBox fp;
    const double w = rng.uniform(0.05, 0.2), h = rng.uniform(0.05, 0.2);
    fp.x1 = rng.uniform(0.0, 1.0 - w);
    fp.y1 = rng.uniform(0.0, 1.0 - h);
    fp.x2 = fp.x1 + w;
    fp.y2 = fp.y1 + h;
    fp.class_id = 2;
    fp.confidence = rng.uniform(0.5, 1.0);
    out.push_back(fp);
  }
  sort_boxes(out);
  return out;
}

DetectionResult noisy_detect(const SimScenario& sim, std::size_t frame, const DetectionNoise& noise,
                             std::uint64_t seed) {
  DetectionResult det = oracle_detect(sim, frame);
  det.boxes = perturb_boxes(det.boxes, noise,
                            frame_noise_seed(seed, sim.scenario.scenario_id,
                                             sim.scenario.samples[frame].seq_index));
  return det;
}

void write_ground_truth_jsonl(const SimScenario& sim, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < sim.frames.size(); ++i) {
    const auto& f = sim.frames[i];
    nlohmann::ordered_json j;
    j["scenario_id"] = sim.scenario.scenario_id;
    j["seq_index"] = sim.scenario.samples[i].seq_index;
    j["occluded"] = f.occluded ? 1 : 0;
    j["night"] = f.night;
    j["boxes"] = nlohmann::ordered_json::parse(detections_to_json(f.boxes));
    out << j.dump() << '\n';
  }
}

void write_sim_scenario(SimScenario& sim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "frames");
  for (std::size_t i = 0; i < sim.frames.size(); ++i) {
    write_ppm(render_frame(sim, i), dir / sim.scenario.samples[i].image_ref);
  }
  sim.scenario.base_dir = dir;
  write_manifest(sim.scenario, dir / "manifest.csv");
  write_ground_truth_jsonl(sim, dir / "ground_truth.jsonl");
}

void GroundTruthStore::add(const SimScenario& sim) {
  auto& dst = frames_[sim.scenario.scenario_id];
  for (std::size_t i = 0; i < sim.frames.size(); ++i) {
    dst[sim.scenario.samples[i].seq_index] = sim.frames[i];
  }
}

void GroundTruthStore::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground truth " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FrameTruth ft;
      ft.occluded = j.at("occluded").get<int>() != 0;
      ft.night = j.value("night", false);
      ft.boxes = parse_detections_json(j.at("boxes").dump());
      frames_[j.at("scenario_id").get<std::string>()][j.at("seq_index").get<std::uint64_t>()] =
          std::move(ft);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const BackendError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

const FrameTruth& GroundTruthStore::at(const std::string& scenario_id, std::uint64_t seq_index) const {
  const auto s = frames_.find(scenario_id);
  if (s == frames_.end()) throw IndexError("no ground truth for scenario '" + scenario_id + "'");
  const auto f = s->second.find(seq_index);
  if (f == s->second.end()) {
    throw IndexError("no ground truth for frame " + std::to_string(seq_index) + " of '" +
                     scenario_id + "'");
  }
  return f->second;
}

std::vector<BoundingBox> OracleDetector::raw_detect(const ImageTensor*, const FrameContext& frame) {
  return truth_.at(frame.scenario_id, frame.seq_index).boxes;
}

std::vector<BoundingBox> NoisyDetector::raw_detect(const ImageTensor*, const FrameContext& frame) {
  return perturb_boxes(truth_.at(frame.scenario_id, frame.seq_index).boxes, noise_,
                       frame_noise_seed(seed_, frame.scenario_id, frame.seq_index));
}

std::string NoisyDetector::describe() const {
  return "noisy:jitter=" + format_double(noise_.jitter_std) + ",miss=" +
         format_double(noise_.miss_prob) + ",fp=" + format_double(noise_.false_positive_rate) +
         ",seed=" + std::to_string(seed_);
}

}  // namespace blockpred
