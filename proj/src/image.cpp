#include "wwe/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wwe/kernels.hpp"

namespace wwe {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<size_t>(h) * w * c, fill) {
  if (h < 1 || w < 1 || (c != 1 && c != 3))
    throw std::invalid_argument("Image: bad dimensions " + std::to_string(h) +
                                "x" + std::to_string(w) + "x" + std::to_string(c));
}

namespace {

constexpr bool kLittleEndianHost = std::endian::native == std::endian::little;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.peek()) != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(in.get()));
      }
      return tok;
    }
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    fail(path, "malformed header");
  long v = std::strtol(tok.c_str(), nullptr, 10);
  if (v < 2 || v > 1 << 24) fail(path, "dimension out of range: " + tok);
  return static_cast<int>(v);
}

Image load_ppm(std::ifstream& in, const std::string& path) {
  int w = parse_dim(next_token(in), path);
  int h = parse_dim(next_token(in), path);
  std::string maxval = next_token(in);
  if (maxval != "255") fail(path, "unsupported max-value: " + maxval);
  in.get();  // single whitespace byte after the header
  std::vector<unsigned char> raw(static_cast<size_t>(h) * w * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size()) fail(path, "truncated pixel data");
  Image img(h, w, 3);
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

void swap_f32(float* p, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    uint32_t u;
    std::memcpy(&u, p + i, 4);
    u = __builtin_bswap32(u);
    std::memcpy(p + i, &u, 4);
  }
}

Image load_pfm(std::ifstream& in, const std::string& path, bool color) {
  int w = parse_dim(next_token(in), path);
  int h = parse_dim(next_token(in), path);
  std::string scale_tok = next_token(in);
  char* end = nullptr;
  double scale = std::strtod(scale_tok.c_str(), &end);
  if (end == scale_tok.c_str() || scale == 0.0) fail(path, "malformed scale line");
  in.get();
  int c = color ? 3 : 1;
  size_t n = static_cast<size_t>(h) * w * c;
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
  if (static_cast<size_t>(in.gcount()) != n * 4) fail(path, "truncated pixel data");
  bool file_le = scale < 0.0;
  if (file_le != kLittleEndianHost) swap_f32(raw.data(), n);
  // Rows are stored bottom-up per the PFM spec; |scale| is not applied.
  Image img(h, w, c);
  size_t row = static_cast<size_t>(w) * c;
  for (int y = 0; y < h; ++y) {
    const float* src = raw.data() + static_cast<size_t>(h - 1 - y) * row;
    double* dst = img.data.data() + static_cast<size_t>(y) * row;
    for (size_t i = 0; i < row; ++i) dst[i] = src[i];
  }
  for (double v : img.data)
    if (!std::isfinite(v)) fail(path, "non-finite sample");
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "unreadable file");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in) fail(path, "malformed header");
  if (m0 == 'P' && m1 == '6') return load_ppm(in, path);
  if (m0 == 'P' && m1 == 'F') return load_pfm(in, path, true);
  if (m0 == 'P' && m1 == 'f') return load_pfm(in, path, false);
  fail(path, "malformed header (unknown magic)");
}

void save_image(const Image& img, const std::string& path) {
  if (img.height < 1 || img.width < 1 || img.size() == 0)
    throw std::invalid_argument(path + ": empty image");
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "unwritable path");
  if (ext == ".ppm") {
    if (img.channels != 3) fail(path, "P6 requires a 3-channel image");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (size_t i = 0; i < img.size(); ++i) {
      double v = std::clamp(img.data[i], 0.0, 1.0);
      raw[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  } else if (ext == ".pfm") {
    out << (img.channels == 3 ? "PF" : "Pf") << "\n"
        << img.width << " " << img.height << "\n"
        << (kLittleEndianHost ? "-1.0" : "1.0") << "\n";
    size_t row = static_cast<size_t>(img.width) * img.channels;
    std::vector<float> raw(img.size());
    for (int y = 0; y < img.height; ++y) {
      const double* src = img.data.data() + static_cast<size_t>(y) * row;
      float* dst = raw.data() + static_cast<size_t>(img.height - 1 - y) * row;
      for (size_t i = 0; i < row; ++i) dst[i] = static_cast<float>(src[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * 4));
  } else {
    fail(path, "unknown extension (expected .ppm or .pfm)");
  }
  if (!out) fail(path, "write failed");
}

Image resize_bilinear(const Image& img, int new_h, int new_w) {
  if (new_h < 2 || new_w < 2)
    throw std::invalid_argument("resize_bilinear: degenerate target size");
  Image out(new_h, new_w, img.channels);
  kern::bilinear_resize(img.data.data(), img.height, img.width, img.channels,
                        out.data.data(), new_h, new_w);
  return out;
}

Image pad_to_multiple(const Image& img, int m) {
  int h = (img.height + m - 1) / m * m;
  int w = (img.width + m - 1) / m * m;
  if (h == img.height && w == img.width) return img;
  Image out(h, w, img.channels);
  for (int y = 0; y < h; ++y) {
    int sy = std::min(y, img.height - 1);
    for (int x = 0; x < w; ++x) {
      int sx = std::min(x, img.width - 1);
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

Image crop(const Image& img, int h, int w) {
  if (h > img.height || w > img.width)
    throw std::invalid_argument("crop: target larger than source");
  if (h == img.height && w == img.width) return img;
  Image out(h, w, img.channels);
  size_t row = static_cast<size_t>(w) * img.channels;
  for (int y = 0; y < h; ++y)
    std::memcpy(out.data.data() + y * row,
                img.data.data() + (static_cast<size_t>(y) * img.width) * img.channels,
                row * sizeof(double));
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace wwe
