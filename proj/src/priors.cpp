#include "wwe/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wwe/kernels.hpp"

namespace wwe {

Image white_balance(const Image& img) {
  if (img.channels != 3)
    throw std::invalid_argument("white_balance: 3-channel image required");
  for (double v : img.data)
    if (v < 0.0) throw std::invalid_argument("white_balance: negative sample");

  const size_t npix = static_cast<size_t>(img.height) * img.width;
  double mu[3] = {0, 0, 0};
  for (size_t p = 0; p < npix; ++p)
    for (int c = 0; c < 3; ++c) mu[c] += img.data[p * 3 + c];
  for (double& m : mu) m /= static_cast<double>(npix);
  const double mu_g = (mu[0] + mu[1] + mu[2]) / 3.0;
  const double gain[3] = {mu_g / (mu[0] + kWbEps), mu_g / (mu[1] + kWbEps),
                          mu_g / (mu[2] + kWbEps)};

  Image out(img.height, img.width, 3);
  double logmu[3] = {0, 0, 0};
  for (size_t p = 0; p < npix; ++p)
    for (int c = 0; c < 3; ++c) {
      double v = std::log(img.data[p * 3 + c] * gain[c] + kWbEps);
      out.data[p * 3 + c] = v;
      logmu[c] += v;
    }
  for (double& m : logmu) m /= static_cast<double>(npix);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (size_t p = 0; p < npix; ++p)
    for (int c = 0; c < 3; ++c) {
      double v = std::exp(out.data[p * 3 + c] - logmu[c]);
      out.data[p * 3 + c] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double inv = 1.0 / (hi - lo + kWbEps);
  for (double& v : out.data) v = (v - lo) * inv;
  return out;
}

Image fuse_wb(const Image& x, const Image& x_wb, const WbGamma& gamma) {
  if (!x.same_shape(x_wb)) throw std::invalid_argument("fuse_wb: shape mismatch");
  if (x.channels != 3) throw std::invalid_argument("fuse_wb: 3-channel images required");
  const double g[3] = {gamma.r, gamma.g, gamma.b};
  for (double v : g)
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument("fuse_wb: gamma component outside [0,1]");
  Image out(x.height, x.width, 3);
  const size_t npix = static_cast<size_t>(x.height) * x.width;
  for (size_t p = 0; p < npix; ++p)
    for (int c = 0; c < 3; ++c)
      out.data[p * 3 + c] =
          g[c] * x_wb.data[p * 3 + c] + (1.0 - g[c]) * x.data[p * 3 + c];
  return out;
}

SubbandSet haar_dwt2(const Image& img) {
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("haar_dwt2: dimensions must be at least 2");
  if (img.height % 2 != 0 || img.width % 2 != 0)
    throw std::invalid_argument("haar_dwt2: even dimensions required");
  const int h2 = img.height / 2, w2 = img.width / 2, c = img.channels;
  SubbandSet sb{Image(h2, w2, c), Image(h2, w2, c), Image(h2, w2, c),
                Image(h2, w2, c)};
  kern::haar_dwt2(img.data.data(), img.height, img.width, c, sb.ll.data.data(),
                  sb.lh.data.data(), sb.hl.data.data(), sb.hh.data.data());
  return sb;
}

Image haar_idwt2(const SubbandSet& sb) {
  if (!sb.ll.same_shape(sb.lh) || !sb.ll.same_shape(sb.hl) ||
      !sb.ll.same_shape(sb.hh))
    throw std::invalid_argument("haar_idwt2: inconsistent subband shapes");
  const int h2 = sb.ll.height, w2 = sb.ll.width, c = sb.ll.channels;
  Image out(2 * h2, 2 * w2, c);
  kern::haar_idwt2(sb.ll.data.data(), sb.lh.data.data(), sb.hl.data.data(),
                   sb.hh.data.data(), h2, w2, c, out.data.data());
  return out;
}

Image sobel_magnitude(const Image& img) {
  if (img.height < 3 || img.width < 3)
    throw std::invalid_argument("sobel_magnitude: image smaller than kernel");
  Image out(img.height, img.width, img.channels);
  std::vector<double> gx(img.size()), gy(img.size());
  kern::sobel_xy(img.data.data(), img.height, img.width, img.channels,
                 gx.data(), gy.data());
  for (size_t i = 0; i < img.size(); ++i)
    out.data[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  return out;
}

}  // namespace wwe
