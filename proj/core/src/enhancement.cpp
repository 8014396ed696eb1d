#include "blockpred/enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "blockpred/errors.hpp"
#include "blockpred/subprocess.hpp"

namespace blockpred {
namespace {

// Nearest-rank percentile of one channel.
float channel_percentile(std::vector<float> values, double pct) {
  if (values.empty()) return 0.0f;
  const double rank = std::clamp(pct / 100.0, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto k = static_cast<std::size_t>(std::lround(rank));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace

std::string to_string(EnhanceMode mode) {
  switch (mode) {
    case EnhanceMode::automatic: return "auto";
    case EnhanceMode::always: return "always";
    case EnhanceMode::never: return "never";
    case EnhanceMode::external: return "external";
  }
  return "auto";
}

EnhanceMode enhance_mode_from_string(const std::string& s) {
  if (s == "auto") return EnhanceMode::automatic;
  if (s == "always") return EnhanceMode::always;
  if (s == "never") return EnhanceMode::never;
  if (s == "external") return EnhanceMode::external;
  throw ConfigError("unknown enhance mode '" + s + "' (expected auto|always|never|external)");
}

void EnhancementConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("enhancement gamma must be > 0");
  if (!(clip_low >= 0.0 && clip_high <= 100.0 && clip_low < clip_high)) {
    throw ConfigError("enhancement clip percentiles must satisfy 0 <= low < high <= 100");
  }
  if (brightness_threshold < 0.0 || brightness_threshold > 1.0) {
    throw ConfigError("brightness_threshold must be in [0,1]");
  }
}

double estimate_brightness(const ImageTensor& img) {
  const std::size_t n = img.pixel_count();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const float* px = &img.data[p * 3];
    sum += 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

ImageTensor enhance(const ImageTensor& img, const EnhancementConfig& cfg) {
  cfg.validate();
  if (cfg.mode == EnhanceMode::never || cfg.mode == EnhanceMode::external) return img;
  if (cfg.mode == EnhanceMode::automatic && estimate_brightness(img) >= cfg.brightness_threshold) {
    return img;
  }

  ImageTensor out = img;
  const std::size_t n = img.pixel_count();
  const auto gamma = static_cast<float>(cfg.gamma);
  for (int c = 0; c < 3; ++c) {
    std::vector<float> channel(n);
    for (std::size_t p = 0; p < n; ++p) channel[p] = img.data[p * 3 + c];
    const float lo = channel_percentile(channel, cfg.clip_low);
    const float hi = channel_percentile(std::move(channel), cfg.clip_high);
    // Degenerate (flat) channels skip the stretch.
    const bool stretch = hi - lo > 1e-6f && hi < 1.0f;
    const float scale = stretch ? (1.0f - lo) / (hi - lo) : 1.0f;
    for (std::size_t p = 0; p < n; ++p) {
      float v = std::clamp(img.data[p * 3 + c], 0.0f, 1.0f);
      if (stretch && v > lo) v = std::min(1.0f, lo + (v - lo) * scale);
      out.data[p * 3 + c] = std::clamp(std::pow(v, gamma), 0.0f, 1.0f);
    }
  }
  return out;
}

ImageTensor enhance_external(const ImageTensor& img, EnhancerBackend& backend) {
  RawImage raw = backend.run(img);
  if (raw.width != img.width || raw.height != img.height || raw.channels != 3) {
    throw ShapeError("enhancer returned " + std::to_string(raw.width) + "x" +
                     std::to_string(raw.height) + "x" + std::to_string(raw.channels) +
                     ", expected " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     "x3");
  }
  if (raw.values.size() != img.data.size()) throw ShapeError("enhancer returned wrong pixel count");
  if (!(raw.value_max > 0.0)) throw BackendError("enhancer declared a non-positive value range");
  for (double v : raw.values) {
    if (!std::isfinite(v) || v < 0.0 || v > raw.value_max) {
      throw BackendError("enhancer output outside its declared range [0, " +
                         std::to_string(raw.value_max) + "]");
    }
  }
  ImageTensor out(img.width, img.height);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    out.data[i] = static_cast<float>(raw.values[i] / raw.value_max);
  }
  return out;
}

double parse_enhancer_handshake(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    const double v = j.at("value_max").get<double>();
    if (!(v > 0.0)) throw BackendError("handshake value_max must be > 0");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("bad enhancer handshake: ") + e.what());
  }
}

namespace {

RawImage decode_backend_image(const std::string& bytes, double value_max) {
  try {
    RawImage raw = decode_pnm(bytes);
    raw.value_max = value_max;
    return raw;
  } catch (const ParseError& e) {
    throw BackendError(std::string("enhancer returned an undecodable image: ") + e.what());
  }
}

}  // namespace

HttpEnhancer::HttpEnhancer(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

RawImage HttpEnhancer::run(const ImageTensor& img) {
  const auto ep = parse_http_url(url_);
  std::call_once(handshake_once_, [&] {
    value_max_ = parse_enhancer_handshake(http_get(ep, "/handshake", timeout_));
  });
  const auto body = http_post(ep, "/enhance", encode_ppm(img), "image/x-portable-pixmap", timeout_);
  return decode_backend_image(body, value_max_);
}

SubprocessEnhancer::SubprocessEnhancer(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

RawImage SubprocessEnhancer::run(const ImageTensor& img) {
  auto argv = split_command(command_);
  std::call_once(handshake_once_, [&] {
    auto hs = argv;
    hs.push_back("--handshake");
    value_max_ = parse_enhancer_handshake(run_subprocess(hs, {}, timeout_));
  });
  return decode_backend_image(run_subprocess(argv, encode_ppm(img), timeout_), value_max_);
}

}  // namespace blockpred
