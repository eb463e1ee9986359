#pragma once
// Color representations used for supervision and evaluation: the HVI
// polarized-chroma space, sRGB(D65) -> CIELab, CIEDE2000, and CIE xyY export.

#include <cmath>
#include <string>
#include <vector>

#include "wwe/image.hpp"

namespace wwe {

inline constexpr double kHviEps = 1e-8;

// Polarized chroma coordinates (signed) plus intensity; all planes H x W.
struct HviImage {
  int height = 0;
  int width = 0;
  std::vector<double> h, v, i;
};

// Intensity-collapse gain c(i) = sin(pi*i/2) + eps.
inline double hvi_gain(double intensity) {
  return std::sin(1.5707963267948966 * intensity) + kHviEps;
}

// HSV hue/saturation/value with H = c(V)*S*cos(2*pi*Hue), V = c*S*sin(...),
// I = value. Out-of-range samples are clamped; *clamped_count (optional)
// receives how many were.
HviImage rgb_to_hvi(const Image& img, int* clamped_count = nullptr);

// Inverse transform followed by standard HSV -> RGB, clamped to [0,1].
// Pixels whose chroma cannot be recovered (gain at the epsilon floor with
// nonzero H/V) are counted into *irrecoverable_count and mapped to gray.
Image hvi_to_rgb(const HviImage& hvi, int* irrecoverable_count = nullptr);

struct LabColor {
  double L = 0, a = 0, b = 0;
};

struct LabPlanes {
  int height = 0;
  int width = 0;
  std::vector<double> L, a, b;
};

// Values are treated as sRGB under D65: EOTF linearization, linear RGB ->
// XYZ, then the standard piecewise cube-root Lab transform.
LabColor rgb_to_lab(double r, double g, double b);
LabPlanes rgb_to_lab(const Image& img);

// Full CIEDE2000 with kL = kC = kH = 1, including the hue-rotation term.
double ciede2000(const LabColor& c1, const LabColor& c2);

struct XyY {
  double x = 0, y = 0, Y = 0;
};

// Per-pixel CIE xyY chromaticity; black pixels map to the D65 white point.
std::vector<XyY> rgb_to_xy(const Image& img);

// CSV with header "x,y,Y", one row per pixel, subsampled by `stride` in both
// directions (stride 1 = every pixel).
void write_xyy_csv(const Image& img, const std::string& path, int stride = 1);

}  // namespace wwe
