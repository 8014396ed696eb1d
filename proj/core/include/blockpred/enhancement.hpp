#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "blockpred/image.hpp"

namespace blockpred {

enum class EnhanceMode { automatic, always, never, external };

std::string to_string(EnhanceMode mode);
EnhanceMode enhance_mode_from_string(const std::string& s);

struct EnhancementConfig {
  double brightness_threshold = 0.25;  // mean luma gate for `automatic`
  double gamma = 0.45;
  double clip_low = 1.0;    // percentile
  double clip_high = 99.0;  // percentile
  EnhanceMode mode = EnhanceMode::automatic;

  /// Throws ConfigError.
  void validate() const;
};

/// Mean Rec.601 luma over all pixels.
double estimate_brightness(const ImageTensor& img);

/// Classical low-light enhancement: per-channel percentile stretch, then gamma.
///
/// The stretch maps the high percentile to 1 and keeps the low percentile
/// fixed, so the curve v -> stretch(v)^gamma is monotone and never darkens a
/// pixel. In `automatic` mode images at or above the brightness threshold are
/// returned unchanged. `external` mode is handled by enhance_external; here it
/// behaves like `never`.
ImageTensor enhance(const ImageTensor& img, const EnhancementConfig& cfg);

/// External learned enhancer (e.g. a MIRNet server).
class EnhancerBackend {
 public:
  virtual ~EnhancerBackend() = default;
  /// Runs the backend. The result is untrusted: shape and range are checked
  /// by enhance_external.
  virtual RawImage run(const ImageTensor& img) = 0;
};

/// Validates backend output to the input shape (W x H x 3) and rescales by
/// the backend's declared value range. Throws ShapeError or BackendError.
ImageTensor enhance_external(const ImageTensor& img, EnhancerBackend& backend);

/// HTTP contract: GET <url>/handshake -> {"value_max": <number>};
/// POST <url>/enhance with a binary PPM body -> binary PNM of the same size.
class HttpEnhancer final : public EnhancerBackend {
 public:
  HttpEnhancer(std::string url, std::chrono::milliseconds timeout);
  RawImage run(const ImageTensor& img) override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
  std::once_flag handshake_once_;
  double value_max_ = 0.0;  // from the handshake, fetched on first use
};

/// Subprocess contract: `<command> --handshake` prints the JSON handshake;
/// `<command>` reads a binary PPM on stdin and writes a binary PNM on stdout.
class SubprocessEnhancer final : public EnhancerBackend {
 public:
  SubprocessEnhancer(std::string command, std::chrono::milliseconds timeout);
  RawImage run(const ImageTensor& img) override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  std::once_flag handshake_once_;
  double value_max_ = 0.0;
};

/// Parses {"value_max": x} with x > 0. Throws BackendError.
double parse_enhancer_handshake(const std::string& json_text);

}  // namespace blockpred
