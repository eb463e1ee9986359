#pragma once
// Image value type plus bit-exact PPM (P6) and PFM file IO.

#include <cstddef>
#include <string>
#include <vector>

namespace wwe {

// Row-major raster, channel-interleaved, nominal range [0,1].
// Treated as immutable once built: every operation allocates its output.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Loads a binary PPM (P6, maxval 255) or PFM ("PF"/"Pf") file; the format is
// detected from the magic bytes. PPM samples map to [0,1] as v/255; PFM
// samples pass through unchanged.
Image load_image(const std::string& path);

// The extension selects the container: .ppm clamps to [0,1] and quantizes
// with round-half-up, .pfm stores raw 32-bit floats (lossless for
// float-valued samples). Grayscale images cannot be written as P6.
void save_image(const Image& img, const std::string& path);

// Bilinear resampling with half-pixel-centered coordinates. Interpolation is
// evaluated in lerp form, so constant inputs and identity resizes are exact.
Image resize_bilinear(const Image& img, int new_h, int new_w);

// Edge-replicates on the bottom/right until both dimensions are multiples
// of m. Returns the input unchanged when they already are.
Image pad_to_multiple(const Image& img, int m);

// Top-left crop.
Image crop(const Image& img, int h, int w);

Image clamp01(const Image& img);

}  // namespace wwe
