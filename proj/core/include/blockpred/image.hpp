#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace blockpred {

/// RGB image with intensities in [0,1], stored row-major HWC with row 0 at the
/// top of the picture.
struct ImageTensor {
  int width = 0;
  int height = 0;
  static constexpr int channels = 3;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * channels, fill) {}

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Unnormalized image as produced by an external backend, before it is
/// validated against the input shape and rescaled by `value_max`.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;  // row-major HWC
  double value_max = 1.0;
};

/// Binary PPM (P6) with maxval 255. Lossless for 8-bit content.
std::string encode_ppm(const ImageTensor& img);

/// Decodes binary PNM (P5 grey or P6 RGB, maxval <= 65535) into raw sample
/// values; value_max is set from the file's maxval. Throws ParseError.
RawImage decode_pnm(std::string_view bytes);

/// Reads PPM/PGM always, PNG and JPEG when the library was built with them.
/// Grey images are expanded to RGB. Throws IoError / ParseError.
ImageTensor read_image(const std::filesystem::path& path);
void write_ppm(const ImageTensor& img, const std::filesystem::path& path);

/// Converts a validated RawImage into [0,1] floats using value_max.
ImageTensor to_tensor(const RawImage& raw);

}  // namespace blockpred
