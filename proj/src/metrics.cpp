#include "wwe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wwe/colorspace.hpp"
#include "wwe/losses.hpp"

namespace wwe {

double psnr(const Image& y, const Image& y_pred) {
  if (!y.same_shape(y_pred)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double d = y.data[i] - y_pred.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(y.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& y, const Image& y_pred) {
  return 1.0 - ssim_loss(y, y_pred, false).value;
}

namespace {

// Linear-interpolation percentile over a sorted copy, q in [0,1].
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t i = static_cast<size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double f = pos - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

}  // namespace

double uciqe(const Image& img) {
  if (img.channels != 3) throw std::invalid_argument("uciqe: 3-channel image required");
  const LabPlanes lab = rgb_to_lab(img);
  const size_t n = lab.L.size();
  double chroma_mean = 0.0;
  std::vector<double> chroma(n);
  for (size_t i = 0; i < n; ++i) {
    chroma[i] = std::sqrt(lab.a[i] * lab.a[i] + lab.b[i] * lab.b[i]);
    chroma_mean += chroma[i];
  }
  chroma_mean /= static_cast<double>(n);
  double var = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = chroma[i] - chroma_mean;
    var += d * d;
  }
  const double sigma_c = std::sqrt(var / static_cast<double>(n));

  const double con_l = (percentile(lab.L, 0.99) - percentile(lab.L, 0.01)) / 100.0;

  double sat_sum = 0.0;
  for (size_t p = 0; p < n; ++p) {
    const double r = img.data[p * 3], g = img.data[p * 3 + 1], b = img.data[p * 3 + 2];
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    sat_sum += mx > 0.0 ? (mx - mn) / mx : 0.0;
  }
  const double mu_s = sat_sum / static_cast<double>(n);

  return 0.4680 * (sigma_c / 100.0) + 0.2745 * con_l + 0.2576 * mu_s;
}

PatchSpec load_patch_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": unreadable file");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "x0,y0,x1,y1,R,G,B")
    throw std::runtime_error(path + ": expected header x0,y0,x1,y1,R,G,B");
  PatchSpec spec;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    double vals[7];
    for (int i = 0; i < 7; ++i) {
      if (!std::getline(ls, tok, ','))
        throw std::runtime_error(path + ": malformed row: " + line);
      vals[i] = std::stod(tok);
    }
    spec.push_back({static_cast<int>(vals[0]), static_cast<int>(vals[1]),
                    static_cast<int>(vals[2]), static_cast<int>(vals[3]), vals[4],
                    vals[5], vals[6]});
  }
  return spec;
}

double chart_eval(const Image& img, const PatchSpec& patches) {
  if (img.channels != 3)
    throw std::invalid_argument("chart_eval: 3-channel image required");
  if (patches.empty()) throw std::invalid_argument("chart_eval: empty patch spec");
  double sum = 0.0;
  for (const Patch& p : patches) {
    if (p.x0 < 0 || p.y0 < 0 || p.x1 <= p.x0 || p.y1 <= p.y0 || p.x1 > img.width ||
        p.y1 > img.height)
      throw std::invalid_argument("chart_eval: patch rectangle out of bounds");
    double r = 0, g = 0, b = 0;
    for (int y = p.y0; y < p.y1; ++y)
      for (int x = p.x0; x < p.x1; ++x) {
        r += img.at(y, x, 0);
        g += img.at(y, x, 1);
        b += img.at(y, x, 2);
      }
    const double cnt = static_cast<double>(p.x1 - p.x0) * (p.y1 - p.y0);
    const LabColor measured = rgb_to_lab(r / cnt, g / cnt, b / cnt);
    const LabColor reference = rgb_to_lab(p.r, p.g, p.b);
    sum += ciede2000(measured, reference);
  }
  return sum / static_cast<double>(patches.size());
}

}  // namespace wwe
