#include "wwe/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace wwe {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// sRGB -> XYZ (D65). The white point is taken from the row sums so that
// gray inputs produce exactly a = b = 0.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
constexpr double kWhite[3] = {kM[0][0] + kM[0][1] + kM[0][2],
                              kM[1][0] + kM[1][1] + kM[1][2],
                              kM[2][0] + kM[2][1] + kM[2][2]};

double srgb_eotf(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

void rgb_to_xyz(double r, double g, double b, double& x, double& y, double& z) {
  const double lr = srgb_eotf(r), lg = srgb_eotf(g), lb = srgb_eotf(b);
  x = kM[0][0] * lr + kM[0][1] * lg + kM[0][2] * lb;
  y = kM[1][0] * lr + kM[1][1] * lg + kM[1][2] * lb;
  z = kM[2][0] * lr + kM[2][1] * lg + kM[2][2] * lb;
}

// HSV from RGB; hue in [0,1), saturation 0 for black. Ties resolve to the
// first channel in R,G,B order.
void rgb_to_hsv(double r, double g, double b, double& hue, double& sat,
                double& val) {
  int amax = 0;
  double mx = r;
  if (g > mx) { mx = g; amax = 1; }
  if (b > mx) { mx = b; amax = 2; }
  double mn = std::min({r, g, b});
  double delta = mx - mn;
  val = mx;
  sat = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) {
    hue = 0.0;
    return;
  }
  double t;
  if (amax == 0)
    t = (g - b) / delta;
  else if (amax == 1)
    t = (b - r) / delta + 2.0;
  else
    t = (r - g) / delta + 4.0;
  if (t < 0.0) t += 6.0;
  hue = t / 6.0;
  if (hue >= 1.0) hue -= 1.0;
}

void hsv_to_rgb(double hue, double sat, double val, double& r, double& g,
                double& b) {
  double t = (hue - std::floor(hue)) * 6.0;
  int sector = static_cast<int>(t);
  if (sector > 5) sector = 5;
  double f = t - sector;
  double p = val * (1.0 - sat);
  double q = val * (1.0 - sat * f);
  double u = val * (1.0 - sat * (1.0 - f));
  switch (sector) {
    case 0: r = val; g = u; b = p; break;
    case 1: r = q; g = val; b = p; break;
    case 2: r = p; g = val; b = u; break;
    case 3: r = p; g = q; b = val; break;
    case 4: r = u; g = p; b = val; break;
    default: r = val; g = p; b = q; break;
  }
}

}  // namespace

HviImage rgb_to_hvi(const Image& img, int* clamped_count) {
  if (img.channels != 3)
    throw std::invalid_argument("rgb_to_hvi: 3-channel image required");
  HviImage out;
  out.height = img.height;
  out.width = img.width;
  const size_t npix = static_cast<size_t>(img.height) * img.width;
  out.h.resize(npix);
  out.v.resize(npix);
  out.i.resize(npix);
  int clamped = 0;
  for (size_t p = 0; p < npix; ++p) {
    double r = img.data[p * 3], g = img.data[p * 3 + 1], b = img.data[p * 3 + 2];
    if (r < 0 || r > 1 || g < 0 || g > 1 || b < 0 || b > 1) ++clamped;
    r = std::clamp(r, 0.0, 1.0);
    g = std::clamp(g, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    double hue, sat, val;
    rgb_to_hsv(r, g, b, hue, sat, val);
    const double c = hvi_gain(val);
    out.h[p] = c * sat * std::cos(kTwoPi * hue);
    out.v[p] = c * sat * std::sin(kTwoPi * hue);
    out.i[p] = val;
  }
  if (clamped_count) *clamped_count = clamped;
  return out;
}

Image hvi_to_rgb(const HviImage& hvi, int* irrecoverable_count) {
  const size_t npix = static_cast<size_t>(hvi.height) * hvi.width;
  if (hvi.h.size() != npix || hvi.v.size() != npix || hvi.i.size() != npix)
    throw std::invalid_argument("hvi_to_rgb: inconsistent plane sizes");
  Image out(hvi.height, hvi.width, 3);
  int lost = 0;
  for (size_t p = 0; p < npix; ++p) {
    const double ii = std::clamp(hvi.i[p], 0.0, 1.0);
    const double c = hvi_gain(ii);
    const double chroma = std::sqrt(hvi.h[p] * hvi.h[p] + hvi.v[p] * hvi.v[p]);
    double sat = 0.0;
    if (chroma > 0.0) {
      if (c <= 2.0 * kHviEps) {
        ++lost;  // chroma present but the gain has collapsed; drop to gray
      } else {
        sat = std::min(chroma / c, 1.0);
      }
    }
    double hue = 0.0;
    if (sat > 0.0) {
      hue = std::atan2(hvi.v[p], hvi.h[p]) / kTwoPi;
      if (hue < 0.0) hue += 1.0;
    }
    double r, g, b;
    hsv_to_rgb(hue, sat, ii, r, g, b);
    out.data[p * 3] = std::clamp(r, 0.0, 1.0);
    out.data[p * 3 + 1] = std::clamp(g, 0.0, 1.0);
    out.data[p * 3 + 2] = std::clamp(b, 0.0, 1.0);
  }
  if (irrecoverable_count) *irrecoverable_count = lost;
  return out;
}

LabColor rgb_to_lab(double r, double g, double b) {
  double x, y, z;
  rgb_to_xyz(r, g, b, x, y, z);
  const double fx = lab_f(x / kWhite[0]);
  const double fy = lab_f(y / kWhite[1]);
  const double fz = lab_f(z / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabPlanes rgb_to_lab(const Image& img) {
  if (img.channels != 3)
    throw std::invalid_argument("rgb_to_lab: 3-channel image required");
  LabPlanes out;
  out.height = img.height;
  out.width = img.width;
  const size_t npix = static_cast<size_t>(img.height) * img.width;
  out.L.resize(npix);
  out.a.resize(npix);
  out.b.resize(npix);
  for (size_t p = 0; p < npix; ++p) {
    LabColor lab =
        rgb_to_lab(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
    out.L[p] = lab.L;
    out.a[p] = lab.a;
    out.b[p] = lab.b;
  }
  return out;
}

double ciede2000(const LabColor& col1, const LabColor& col2) {
  const double rad = kPi / 180.0;
  const double c1 = std::hypot(col1.a, col1.b);
  const double c2 = std::hypot(col2.a, col2.b);
  const double cm = 0.5 * (c1 + c2);
  const double cm7 = std::pow(cm, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(cm7 / (cm7 + 6103515625.0)));  // 25^7
  const double ap1 = (1.0 + g) * col1.a;
  const double ap2 = (1.0 + g) * col2.a;
  const double cp1 = std::hypot(ap1, col1.b);
  const double cp2 = std::hypot(ap2, col2.b);
  auto hue_deg = [&](double ap, double b) {
    if (ap == 0.0 && b == 0.0) return 0.0;
    double h = std::atan2(b, ap) / rad;
    return h < 0.0 ? h + 360.0 : h;
  };
  const double hp1 = hue_deg(ap1, col1.b);
  const double hp2 = hue_deg(ap2, col2.b);

  const double dl = col2.L - col1.L;
  const double dc = cp2 - cp1;
  double dhp = 0.0;
  if (cp1 * cp2 != 0.0) {
    dhp = hp2 - hp1;
    if (dhp > 180.0)
      dhp -= 360.0;
    else if (dhp < -180.0)
      dhp += 360.0;
  }
  const double dh = 2.0 * std::sqrt(cp1 * cp2) * std::sin(0.5 * dhp * rad);

  const double lm = 0.5 * (col1.L + col2.L);
  const double cpm = 0.5 * (cp1 + cp2);
  double hpm;
  if (cp1 * cp2 == 0.0) {
    hpm = hp1 + hp2;
  } else {
    const double sum = hp1 + hp2;
    if (std::fabs(hp1 - hp2) <= 180.0)
      hpm = 0.5 * sum;
    else if (sum < 360.0)
      hpm = 0.5 * (sum + 360.0);
    else
      hpm = 0.5 * (sum - 360.0);
  }

  const double t = 1.0 - 0.17 * std::cos((hpm - 30.0) * rad) +
                   0.24 * std::cos(2.0 * hpm * rad) +
                   0.32 * std::cos((3.0 * hpm + 6.0) * rad) -
                   0.20 * std::cos((4.0 * hpm - 63.0) * rad);
  const double dtheta = 30.0 * std::exp(-((hpm - 275.0) / 25.0) * ((hpm - 275.0) / 25.0));
  const double cpm7 = std::pow(cpm, 7.0);
  const double rc = 2.0 * std::sqrt(cpm7 / (cpm7 + 6103515625.0));
  const double lm50 = (lm - 50.0) * (lm - 50.0);
  const double sl = 1.0 + 0.015 * lm50 / std::sqrt(20.0 + lm50);
  const double sc = 1.0 + 0.045 * cpm;
  const double sh = 1.0 + 0.015 * cpm * t;
  const double rt = -std::sin(2.0 * dtheta * rad) * rc;

  const double vl = dl / sl, vc = dc / sc, vh = dh / sh;
  return std::sqrt(vl * vl + vc * vc + vh * vh + rt * vc * vh);
}

std::vector<XyY> rgb_to_xy(const Image& img) {
  if (img.channels != 3)
    throw std::invalid_argument("rgb_to_xy: 3-channel image required");
  const double wsum = kWhite[0] + kWhite[1] + kWhite[2];
  const double wx = kWhite[0] / wsum, wy = kWhite[1] / wsum;
  const size_t npix = static_cast<size_t>(img.height) * img.width;
  std::vector<XyY> out(npix);
  for (size_t p = 0; p < npix; ++p) {
    double x, y, z;
    rgb_to_xyz(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2], x, y, z);
    const double s = x + y + z;
    if (s < 1e-9) {
      out[p] = {wx, wy, 0.0};
    } else {
      out[p] = {x / s, y / s, y};
    }
  }
  return out;
}

void write_xyy_csv(const Image& img, const std::string& path, int stride) {
  if (stride < 1) throw std::invalid_argument("write_xyy_csv: stride must be >= 1");
  std::vector<XyY> pts = rgb_to_xy(img);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": unwritable path");
  out << "x,y,Y\n";
  char buf[96];
  for (int y = 0; y < img.height; y += stride)
    for (int x = 0; x < img.width; x += stride) {
      const XyY& p = pts[static_cast<size_t>(y) * img.width + x];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", p.x, p.y, p.Y);
      out << buf;
    }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace wwe
