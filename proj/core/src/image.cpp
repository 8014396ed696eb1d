#include "blockpred/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "blockpred/errors.hpp"

#ifdef BLOCKPRED_HAVE_PNG
#include <png.h>
#endif
#ifdef BLOCKPRED_HAVE_JPEG
#include <csetjmp>
#include <cstdio>
#include <jpeglib.h>
#endif

namespace blockpred {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string_view next_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

int parse_positive(std::string_view tok, const char* what) {
  int v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') throw ParseError(std::string("bad PNM ") + what);
    v = v * 10 + (c - '0');
    if (v > (1 << 24)) throw ParseError(std::string("PNM ") + what + " too large");
  }
  if (tok.empty() || v <= 0) throw ParseError(std::string("bad PNM ") + what);
  return v;
}

ImageTensor expand_to_rgb(const RawImage& raw) {
  ImageTensor img(raw.width, raw.height);
  const std::size_t n = img.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      const double v = raw.channels == 1 ? raw.values[p] : raw.values[p * raw.channels + c];
      img.data[p * 3 + c] = static_cast<float>(std::clamp(v / raw.value_max, 0.0, 1.0));
    }
  }
  return img;
}

#ifdef BLOCKPRED_HAVE_PNG
RawImage decode_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw ParseError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  RawImage raw{static_cast<int>(image.width), static_cast<int>(image.height), 3, {}, 255.0};
  raw.values.assign(buffer.begin(), buffer.end());
  return raw;
}
#endif

#ifdef BLOCKPRED_HAVE_JPEG
struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

RawImage decode_jpeg(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  // libjpeg's default handler exits the process.
  err.pub.error_exit = [](j_common_ptr info) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, mgr->message);
    std::longjmp(mgr->jump, 1);
  };
  RawImage raw;
  std::vector<unsigned char> row;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ParseError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raw.width = static_cast<int>(cinfo.output_width);
  raw.height = static_cast<int>(cinfo.output_height);
  raw.channels = 3;
  raw.value_max = 255.0;
  raw.values.reserve(static_cast<std::size_t>(raw.width) * raw.height * 3);
  row.resize(static_cast<std::size_t>(raw.width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    raw.values.insert(raw.values.end(), row.begin(), row.end());
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return raw;
}
#endif

}  // namespace

std::string encode_ppm(const ImageTensor& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const float v = std::clamp(img.data[i], 0.0f, 1.0f);
    out[header + i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
  }
  return out;
}

RawImage decode_pnm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto magic = next_token(bytes, pos);
  int channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw ParseError("not a binary PNM image");
  }
  RawImage raw;
  raw.channels = channels;
  raw.width = parse_positive(next_token(bytes, pos), "width");
  raw.height = parse_positive(next_token(bytes, pos), "height");
  const int maxval = parse_positive(next_token(bytes, pos), "maxval");
  if (maxval > 65535) throw ParseError("PNM maxval exceeds 65535");
  raw.value_max = maxval;
  ++pos;  // single whitespace byte after maxval
  const std::size_t bps = maxval < 256 ? 1 : 2;
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height * channels;
  if (bytes.size() < pos + n * bps) throw ParseError("truncated PNM pixel data");
  raw.values.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < n; ++i) {
    raw.values[i] = bps == 1 ? p[i] : static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return raw;
}

ImageTensor to_tensor(const RawImage& raw) { return expand_to_rgb(raw); }

ImageTensor read_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    return expand_to_rgb(decode_pnm(read_file(path)));
  }
#ifdef BLOCKPRED_HAVE_PNG
  if (ext == ".png") return expand_to_rgb(decode_png(path));
#endif
#ifdef BLOCKPRED_HAVE_JPEG
  if (ext == ".jpg" || ext == ".jpeg") return expand_to_rgb(decode_jpeg(path));
#endif
  throw IoError("unsupported image format: " + path.string());
}

void write_ppm(const ImageTensor& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path.string());
  const auto bytes = encode_ppm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace blockpred
