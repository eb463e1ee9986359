#include "wwe/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "wwe/colorspace.hpp"
#include "wwe/kernels.hpp"

namespace wwe {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

void require_same_shape(const Image& a, const Image& b, const char* who) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

// ---- Charbonnier ------------------------------------------------------------

LossTerm charbonnier(const Image& y, const Image& y_pred, bool with_grad) {
  require_same_shape(y, y_pred, "charbonnier");
  const size_t n = y.size();
  const double eps2 = kCharbonnierEps * kCharbonnierEps;
  LossTerm term;
  if (with_grad) term.grad = Image(y.height, y.width, y.channels);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = y.data[i] - y_pred.data[i];
    const double root = std::sqrt(d * d + eps2);
    sum += root;
    if (with_grad) term.grad.data[i] = -d / (static_cast<double>(n) * root);
  }
  term.value = sum / static_cast<double>(n);
  return term;
}

// ---- SSIM -------------------------------------------------------------------

namespace {

constexpr int kWin = 11;
constexpr double kSsimC1 = 1e-4;  // (0.01 * 1)^2
constexpr double kSsimC2 = 9e-4;  // (0.03 * 1)^2

const double* gaussian11() {
  static double g[kWin];
  static bool init = false;
  if (!init) {
    const double sigma = 1.5;
    double s = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2;
      g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      s += g[i];
    }
    for (int i = 0; i < kWin; ++i) g[i] /= s;
    init = true;
  }
  return g;
}

// Valid-region separable filtering: rows first (w -> w-10) then columns.
void filter_valid(const std::vector<double>& in, int h, int w,
                  std::vector<double>& tmp, std::vector<double>& out) {
  const double* g = gaussian11();
  const int vw = w - kWin + 1, vh = h - kWin + 1;
  tmp.assign(static_cast<size_t>(h) * vw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      const double* row = in.data() + static_cast<size_t>(y) * w + x;
      for (int k = 0; k < kWin; ++k) s += g[k] * row[k];
      tmp[static_cast<size_t>(y) * vw + x] = s;
    }
  out.assign(static_cast<size_t>(vh) * vw, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * tmp[static_cast<size_t>(y + k) * vw + x];
      out[static_cast<size_t>(y) * vw + x] = s;
    }
}

// Spread a valid-size coefficient field back to full size:
// out[y][x] = sum_k g[ky] g[kx] r[y-ky][x-kx] over in-range indices.
void spread_full(const std::vector<double>& r, int vh, int vw, int h, int w,
                 std::vector<double>& tmp, std::vector<double>& out) {
  const double* g = gaussian11();
  tmp.assign(static_cast<size_t>(h) * vw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int k = 0; k < kWin; ++k) {
      const int sy = y - k;
      if (sy < 0 || sy >= vh) continue;
      const double gk = g[k];
      double* trow = tmp.data() + static_cast<size_t>(y) * vw;
      const double* rrow = r.data() + static_cast<size_t>(sy) * vw;
      for (int x = 0; x < vw; ++x) trow[x] += gk * rrow[x];
    }
  out.assign(static_cast<size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) {
        const int sx = x - k;
        if (sx < 0 || sx >= vw) continue;
        s += g[k] * tmp[static_cast<size_t>(y) * vw + sx];
      }
      out[static_cast<size_t>(y) * w + x] = s;
    }
}

}  // namespace

LossTerm ssim_loss(const Image& y, const Image& y_pred, bool with_grad) {
  require_same_shape(y, y_pred, "ssim_loss");
  if (y.height < kWin || y.width < kWin)
    throw std::invalid_argument("ssim_loss: image smaller than the 11x11 window");
  const int h = y.height, w = y.width, ch = y.channels;
  const int vh = h - kWin + 1, vw = w - kWin + 1;
  const size_t npix = static_cast<size_t>(h) * w;
  const size_t nval = static_cast<size_t>(vh) * vw;
  const double pcount = static_cast<double>(nval) * ch;

  LossTerm term;
  if (with_grad) term.grad = Image(h, w, ch);

  std::vector<double> px(npix), pz(npix), prod(npix);
  std::vector<double> mx, mz, mxx, mzz, mxz, tmp;
  std::vector<double> r0, r1, r2, s0, s1, s2, sp_tmp;
  double ssim_sum = 0.0;
  for (int c = 0; c < ch; ++c) {
    for (size_t p = 0; p < npix; ++p) {
      px[p] = y.data[p * ch + c];
      pz[p] = y_pred.data[p * ch + c];
    }
    filter_valid(px, h, w, tmp, mx);
    filter_valid(pz, h, w, tmp, mz);
    for (size_t p = 0; p < npix; ++p) prod[p] = px[p] * px[p];
    filter_valid(prod, h, w, tmp, mxx);
    for (size_t p = 0; p < npix; ++p) prod[p] = pz[p] * pz[p];
    filter_valid(prod, h, w, tmp, mzz);
    for (size_t p = 0; p < npix; ++p) prod[p] = px[p] * pz[p];
    filter_valid(prod, h, w, tmp, mxz);

    if (with_grad) {
      r0.assign(nval, 0.0);
      r1.assign(nval, 0.0);
      r2.assign(nval, 0.0);
    }
    for (size_t p = 0; p < nval; ++p) {
      const double ux = mx[p], uz = mz[p];
      const double sx = mxx[p] - ux * ux;
      const double sz = mzz[p] - uz * uz;
      const double sxz = mxz[p] - ux * uz;
      const double a1 = 2.0 * ux * uz + kSsimC1;
      const double a2 = 2.0 * sxz + kSsimC2;
      const double b1 = ux * ux + uz * uz + kSsimC1;
      const double b2 = sx + sz + kSsimC2;
      const double s = (a1 * a2) / (b1 * b2);
      ssim_sum += s;
      if (with_grad) {
        const double q1 = (a2 / b2) * (2.0 * ux * b1 - 2.0 * uz * a1) / (b1 * b1);
        const double q2 = -s / b2;
        const double q3 = 2.0 * a1 / (b1 * b2);
        r0[p] = q1 - 2.0 * q2 * uz - q3 * ux;
        r1[p] = q2;
        r2[p] = q3;
      }
    }
    if (with_grad) {
      spread_full(r0, vh, vw, h, w, sp_tmp, s0);
      spread_full(r1, vh, vw, h, w, sp_tmp, s1);
      spread_full(r2, vh, vw, h, w, sp_tmp, s2);
      for (size_t p = 0; p < npix; ++p)
        term.grad.data[p * ch + c] =
            -(s0[p] + 2.0 * pz[p] * s1[p] + px[p] * s2[p]) / pcount;
    }
  }
  term.value = 1.0 - ssim_sum / pcount;
  return term;
}

// ---- Edge (Sobel) loss ------------------------------------------------------

namespace {
constexpr double kEdgeEps = 1e-8;  // inside the magnitude square root
const int kSobelX[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
const int kSobelY[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
}  // namespace

LossTerm edge_loss(const Image& y, const Image& y_pred, bool with_grad) {
  require_same_shape(y, y_pred, "edge_loss");
  if (y.height < 3 || y.width < 3)
    throw std::invalid_argument("edge_loss: image smaller than the Sobel kernel");
  const int h = y.height, w = y.width, ch = y.channels;
  const size_t n = y.size();
  std::vector<double> gxr(n), gyr(n), gxp(n), gyp(n);
  kern::sobel_xy(y.data.data(), h, w, ch, gxr.data(), gyr.data());
  kern::sobel_xy(y_pred.data.data(), h, w, ch, gxp.data(), gyp.data());

  LossTerm term;
  double sum = 0.0;
  std::vector<double> cx, cy;
  if (with_grad) {
    term.grad = Image(h, w, ch);
    cx.resize(n);
    cy.resize(n);
  }
  for (size_t i = 0; i < n; ++i) {
    const double gr = std::sqrt(gxr[i] * gxr[i] + gyr[i] * gyr[i] + kEdgeEps);
    const double gp = std::sqrt(gxp[i] * gxp[i] + gyp[i] * gyp[i] + kEdgeEps);
    const double d = gr - gp;
    sum += d * d;
    if (with_grad) {
      const double u = 2.0 * (gp - gr) / static_cast<double>(n);
      cx[i] = u * gxp[i] / gp;
      cy[i] = u * gyp[i] / gp;
    }
  }
  term.value = sum / static_cast<double>(n);
  if (with_grad) {
    // adjoint of the replicate-padded correlation
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        for (int t = 0; t < 9; ++t) {
          const int sy = kern::clampi(yy + t / 3 - 1, 0, h - 1);
          const int sx = kern::clampi(xx + t % 3 - 1, 0, w - 1);
          for (int c = 0; c < ch; ++c) {
            const size_t p = (static_cast<size_t>(yy) * w + xx) * ch + c;
            term.grad.data[(static_cast<size_t>(sy) * w + sx) * ch + c] +=
                cx[p] * kSobelX[t] + cy[p] * kSobelY[t];
          }
        }
  }
  return term;
}

// ---- HVI loss ---------------------------------------------------------------

namespace {

// HVI transform of one pixel together with the jacobian wrt (r,g,b).
// Ties resolve to the first channel in R,G,B order; the transform is applied
// to the raw values (no clamping) so finite differences stay consistent.
struct HviJac {
  double hh = 0, vv = 0, ii = 0;
  double dh[3] = {0, 0, 0}, dv[3] = {0, 0, 0}, di[3] = {0, 0, 0};
};

HviJac hvi_jac(double r, double g, double b) {
  HviJac j;
  const double v[3] = {r, g, b};
  int amax = 0, amin = 0;
  for (int k = 1; k < 3; ++k) {
    if (v[k] > v[amax]) amax = k;
    if (v[k] < v[amin]) amin = k;
  }
  const double mx = v[amax], mn = v[amin], delta = mx - mn;
  j.ii = mx;
  j.di[amax] = 1.0;
  if (mx <= 1e-12) return j;  // black: zero chroma, conventionally flat

  double s = delta / mx;
  double ds[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    const double dd = (k == amax ? 1.0 : 0.0) - (k == amin ? 1.0 : 0.0);
    ds[k] = (dd * mx - delta * (k == amax ? 1.0 : 0.0)) / (mx * mx);
  }
  double hue = 0.0, dhue[3] = {0, 0, 0};
  if (delta > 0.0) {
    double t, dt[3];
    auto dterm = [&](int p, int q, int k) {
      const double dnum = (k == p ? 1.0 : 0.0) - (k == q ? 1.0 : 0.0);
      const double dden = (k == amax ? 1.0 : 0.0) - (k == amin ? 1.0 : 0.0);
      return dnum / delta - (v[p] - v[q]) * dden / (delta * delta);
    };
    if (amax == 0) {
      t = (g - b) / delta;
      for (int k = 0; k < 3; ++k) dt[k] = dterm(1, 2, k);
    } else if (amax == 1) {
      t = (b - r) / delta + 2.0;
      for (int k = 0; k < 3; ++k) dt[k] = dterm(2, 0, k);
    } else {
      t = (r - g) / delta + 4.0;
      for (int k = 0; k < 3; ++k) dt[k] = dterm(0, 1, k);
    }
    if (t < 0.0) t += 6.0;
    hue = t / 6.0;
    for (int k = 0; k < 3; ++k) dhue[k] = dt[k] / 6.0;
  }
  const double c = std::sin(0.5 * kPi * j.ii) + kHviEps;
  double dc[3] = {0, 0, 0};
  dc[amax] = 0.5 * kPi * std::cos(0.5 * kPi * j.ii);
  const double ct = std::cos(kTwoPi * hue), st = std::sin(kTwoPi * hue);
  j.hh = c * s * ct;
  j.vv = c * s * st;
  for (int k = 0; k < 3; ++k) {
    j.dh[k] = dc[k] * s * ct + c * ds[k] * ct - c * s * st * kTwoPi * dhue[k];
    j.dv[k] = dc[k] * s * st + c * ds[k] * st + c * s * ct * kTwoPi * dhue[k];
  }
  return j;
}

}  // namespace

LossTerm hvi_loss(const Image& y, const Image& y_pred, bool with_grad) {
  require_same_shape(y, y_pred, "hvi_loss");
  if (y.channels != 3)
    throw std::invalid_argument("hvi_loss: 3-channel images required");
  const size_t npix = static_cast<size_t>(y.height) * y.width;
  const double m = 3.0 * static_cast<double>(npix);
  const double eps2 = kCharbonnierEps * kCharbonnierEps;
  LossTerm term;
  if (with_grad) term.grad = Image(y.height, y.width, 3);
  double sum = 0.0;
  for (size_t p = 0; p < npix; ++p) {
    const HviJac jy =
        hvi_jac(y.data[p * 3], y.data[p * 3 + 1], y.data[p * 3 + 2]);
    const HviJac jz = hvi_jac(y_pred.data[p * 3], y_pred.data[p * 3 + 1],
                              y_pred.data[p * 3 + 2]);
    const double d[3] = {jz.hh - jy.hh, jz.vv - jy.vv, jz.ii - jy.ii};
    double gplane[3];
    for (int q = 0; q < 3; ++q) {
      const double root = std::sqrt(d[q] * d[q] + eps2);
      sum += root;
      gplane[q] = d[q] / (m * root);
    }
    if (with_grad)
      for (int k = 0; k < 3; ++k)
        term.grad.data[p * 3 + k] = gplane[0] * jz.dh[k] + gplane[1] * jz.dv[k] +
                                    gplane[2] * jz.di[k];
  }
  term.value = sum / m;
  return term;
}

// ---- perceptual -------------------------------------------------------------

Image FeatureExtractor::backprop(const Image&, const std::vector<FeatureTensor>&) const {
  throw std::runtime_error("FeatureExtractor: gradient not supported");
}

std::vector<FeatureTensor> IdentityExtractor::features(const Image& img) const {
  FeatureTensor t{img.height, img.width, img.channels, img.data};
  return {std::move(t)};
}

Image IdentityExtractor::backprop(const Image& x,
                                  const std::vector<FeatureTensor>& cot) const {
  if (cot.size() != 1 || cot[0].data.size() != x.size())
    throw std::invalid_argument("IdentityExtractor: cotangent shape mismatch");
  Image g(x.height, x.width, x.channels);
  g.data = cot[0].data;
  return g;
}

namespace {

FeatureTensor dconv3(const FeatureTensor& in, const std::vector<double>& w,
                     const std::vector<double>& bias, int cout) {
  const int h = in.height, wd = in.width, cin = in.channels;
  FeatureTensor out{h, wd, cout, std::vector<double>(static_cast<size_t>(h) * wd * cout)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      for (int co = 0; co < cout; ++co) {
        double acc = bias[co];
        for (int t = 0; t < 9; ++t) {
          const int sy = kern::clampi(y + t / 3 - 1, 0, h - 1);
          const int sx = kern::clampi(x + t % 3 - 1, 0, wd - 1);
          const double* ip = in.data.data() + (static_cast<size_t>(sy) * wd + sx) * cin;
          for (int ci = 0; ci < cin; ++ci)
            acc += ip[ci] * w[(static_cast<size_t>(co) * cin + ci) * 9 + t];
        }
        out.data[(static_cast<size_t>(y) * wd + x) * cout + co] = acc;
      }
  return out;
}

FeatureTensor dconv3_adjoint(const FeatureTensor& cot, const std::vector<double>& w,
                             int cin) {
  const int h = cot.height, wd = cot.width, cout = cot.channels;
  FeatureTensor out{h, wd, cin, std::vector<double>(static_cast<size_t>(h) * wd * cin, 0.0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      for (int co = 0; co < cout; ++co) {
        const double g = cot.data[(static_cast<size_t>(y) * wd + x) * cout + co];
        if (g == 0.0) continue;
        for (int t = 0; t < 9; ++t) {
          const int sy = kern::clampi(y + t / 3 - 1, 0, h - 1);
          const int sx = kern::clampi(x + t % 3 - 1, 0, wd - 1);
          double* op = out.data.data() + (static_cast<size_t>(sy) * wd + sx) * cin;
          for (int ci = 0; ci < cin; ++ci)
            op[ci] += g * w[(static_cast<size_t>(co) * cin + ci) * 9 + t];
        }
      }
  return out;
}

constexpr double kLrelu = 0.2;

}  // namespace

ToyConvExtractor::ToyConvExtractor() {
  std::mt19937_64 rng(0x7071e57ULL);
  auto u01 = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto fill = [&](std::vector<double>& v, size_t n, double bound) {
    v.resize(n);
    for (double& x : v) x = (2.0 * u01() - 1.0) * bound;
  };
  fill(w1_, 8 * 3 * 9, std::sqrt(6.0 / (3 * 9)));
  b1_.assign(8, 0.0);
  fill(w2_, 8 * 8 * 9, std::sqrt(6.0 / (8 * 9)));
  b2_.assign(8, 0.0);
}

std::vector<FeatureTensor> ToyConvExtractor::run(const Image& img,
                                                 FeatureTensor* pre1_out) const {
  if (img.channels != 3)
    throw std::invalid_argument("ToyConvExtractor: 3-channel input required");
  FeatureTensor x{img.height, img.width, 3, img.data};
  FeatureTensor pre1 = dconv3(x, w1_, b1_, 8);
  FeatureTensor f1 = pre1;
  for (double& v : f1.data)
    if (v < 0.0) v *= kLrelu;
  FeatureTensor f2 = dconv3(f1, w2_, b2_, 8);
  if (pre1_out) *pre1_out = std::move(pre1);
  return {std::move(f1), std::move(f2)};
}

std::vector<FeatureTensor> ToyConvExtractor::features(const Image& img) const {
  return run(img, nullptr);
}

Image ToyConvExtractor::backprop(const Image& x,
                                 const std::vector<FeatureTensor>& cot) const {
  if (cot.size() != 2)
    throw std::invalid_argument("ToyConvExtractor: expected two cotangents");
  FeatureTensor pre1;
  std::vector<FeatureTensor> feats = run(x, &pre1);
  FeatureTensor gf1 = dconv3_adjoint(cot[1], w2_, 8);
  for (size_t i = 0; i < gf1.data.size(); ++i) gf1.data[i] += cot[0].data[i];
  for (size_t i = 0; i < gf1.data.size(); ++i)
    if (pre1.data[i] < 0.0) gf1.data[i] *= kLrelu;
  FeatureTensor gx = dconv3_adjoint(gf1, w1_, 3);
  Image g(x.height, x.width, 3);
  g.data = std::move(gx.data);
  return g;
}

LossTerm perceptual_loss(const Image& y, const Image& y_pred,
                         const FeatureExtractor& extractor, bool with_grad) {
  require_same_shape(y, y_pred, "perceptual_loss");
  const std::vector<FeatureTensor> fy = extractor.features(y);
  const std::vector<FeatureTensor> fz = extractor.features(y_pred);
  if (fy.size() != fz.size())
    throw std::runtime_error("perceptual_loss: feature-count mismatch");
  const double n = static_cast<double>(fy.size());
  LossTerm term;
  std::vector<FeatureTensor> cots;
  for (size_t i = 0; i < fy.size(); ++i) {
    if (fy[i].data.size() != fz[i].data.size())
      throw std::runtime_error("perceptual_loss: feature-shape mismatch");
    double sq = 0.0;
    for (size_t k = 0; k < fy[i].data.size(); ++k) {
      const double d = fz[i].data[k] - fy[i].data[k];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    term.value += norm / n;
    if (with_grad) {
      FeatureTensor c = fz[i];
      const double scale = 1.0 / (n * std::max(norm, 1e-12));
      for (size_t k = 0; k < c.data.size(); ++k)
        c.data[k] = (fz[i].data[k] - fy[i].data[k]) * scale;
      cots.push_back(std::move(c));
    }
  }
  if (with_grad) {
    if (!extractor.supports_gradient())
      throw std::invalid_argument("perceptual_loss: extractor has no gradient support");
    term.grad = extractor.backprop(y_pred, cots);
  }
  return term;
}

// ---- total ------------------------------------------------------------------

LossBreakdown total_loss(const Image& y, const Image& y_pred, const LossWeights& w,
                         const FeatureExtractor* extractor, bool with_grad) {
  require_same_shape(y, y_pred, "total_loss");
  if (w.c < 0 || w.vgg < 0 || w.ssim < 0 || w.edge < 0 || w.hvi < 0)
    throw std::invalid_argument("total_loss: negative loss weight");
  LossBreakdown bd;
  LossTerm tc = charbonnier(y, y_pred, with_grad);
  LossTerm ts = ssim_loss(y, y_pred, with_grad);
  LossTerm te = edge_loss(y, y_pred, with_grad);
  LossTerm th = hvi_loss(y, y_pred, with_grad);
  LossTerm tv;
  if (extractor) {
    tv = perceptual_loss(y, y_pred, *extractor, with_grad);
    bd.perceptual_evaluated = true;
  }
  bd.charbonnier = tc.value;
  bd.ssim = ts.value;
  bd.edge = te.value;
  bd.hvi = th.value;
  bd.perceptual = tv.value;
  bd.total = w.c * bd.charbonnier + w.vgg * bd.perceptual + w.ssim * bd.ssim +
             w.edge * bd.edge + w.hvi * bd.hvi;
  if (with_grad) {
    bd.grad = Image(y.height, y.width, y.channels);
    for (size_t i = 0; i < bd.grad.size(); ++i) {
      double g = w.c * tc.grad.data[i] + w.ssim * ts.grad.data[i] +
                 w.edge * te.grad.data[i] + w.hvi * th.grad.data[i];
      if (extractor) g += w.vgg * tv.grad.data[i];
      bd.grad.data[i] = g;
    }
  }
  return bd;
}

// ---- gradient checker -------------------------------------------------------

namespace {

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Smooth random field in [0,1]: a handful of low-frequency cosines,
// min-max normalized.
std::vector<double> smooth_field(int h, int w, std::mt19937_64& rng) {
  std::vector<double> f(static_cast<size_t>(h) * w, 0.0);
  for (int k = 0; k < 5; ++k) {
    const double fy = (2.0 * u01(rng) - 1.0) * 1.5 / h;
    const double fx = (2.0 * u01(rng) - 1.0) * 1.5 / w;
    const double ph = u01(rng) * kTwoPi;
    const double amp = 0.5 + 0.5 * u01(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        f[static_cast<size_t>(y) * w + x] +=
            amp * std::cos(kTwoPi * (fy * y + fx * x) + ph);
  }
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double l = *lo, span = std::max(*hi - l, 1e-12);
  for (double& v : f) v = (v - l) / span;
  return f;
}

Image smooth_image(int h, int w, double lo, double hi, std::mt19937_64& rng) {
  Image img(h, w, 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> f = smooth_field(h, w, rng);
    for (size_t p = 0; p < f.size(); ++p)
      img.data[p * 3 + c] = lo + (hi - lo) * f[p];
  }
  return img;
}

struct GradPair {
  Image y, z;
};

// Pairs are shaped so the finite-difference oracle is well conditioned for
// each loss: residuals away from the Charbonnier kink, Sobel magnitudes away
// from zero, channels separated by wide bands for the HVI hue branches.
GradPair make_pair(const std::string& loss, int h, int w, std::mt19937_64& rng) {
  GradPair pr;
  if (loss == "charbonnier") {
    pr.y = smooth_image(h, w, 0.2, 0.8, rng);
    pr.z = pr.y;
    for (double& v : pr.z.data) {
      const double mag = 0.05 + 0.15 * u01(rng);
      v += (rng() & 1) ? mag : -mag;
    }
  } else if (loss == "edge") {
    pr.y = Image(h, w, 3);
    pr.z = Image(h, w, 3);
    for (int c = 0; c < 3; ++c) {
      std::vector<double> f1 = smooth_field(h, w, rng);
      std::vector<double> f2 = smooth_field(h, w, rng);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const size_t p = static_cast<size_t>(y) * w + x;
          pr.y.data[p * 3 + c] = 0.05 + 0.045 * x + 0.03 * f1[p];
          pr.z.data[p * 3 + c] = 0.05 + 0.055 * x + 0.03 * f2[p];
        }
    }
  } else if (loss == "ssim") {
    pr.y = smooth_image(h, w, 0.2, 0.8, rng);
    pr.z = smooth_image(h, w, 0.25, 0.75, rng);
  } else if (loss == "hvi") {
    const double bands[3][2] = {{0.10, 0.30}, {0.40, 0.60}, {0.70, 0.90}};
    int perm[3] = {0, 1, 2};
    for (int i = 2; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
    auto build = [&]() {
      Image img(h, w, 3);
      for (int c = 0; c < 3; ++c) {
        std::vector<double> f = smooth_field(h, w, rng);
        const double lo = bands[perm[c]][0], hi = bands[perm[c]][1];
        for (size_t p = 0; p < f.size(); ++p)
          img.data[p * 3 + c] = lo + (hi - lo) * f[p];
      }
      return img;
    };
    pr.y = build();
    pr.z = build();
  } else {
    throw std::invalid_argument("grad_check: unknown loss " + loss);
  }
  return pr;
}

double loss_value(const std::string& loss, const Image& y, const Image& z) {
  if (loss == "charbonnier") return charbonnier(y, z, false).value;
  if (loss == "edge") return edge_loss(y, z, false).value;
  if (loss == "ssim") return ssim_loss(y, z, false).value;
  return hvi_loss(y, z, false).value;
}

Image loss_grad(const std::string& loss, const Image& y, const Image& z) {
  if (loss == "charbonnier") return charbonnier(y, z, true).grad;
  if (loss == "edge") return edge_loss(y, z, true).grad;
  if (loss == "ssim") return ssim_loss(y, z, true).grad;
  return hvi_loss(y, z, true).grad;
}

double loss_tolerance(const std::string& loss) {
  if (loss == "charbonnier") return 1e-5;
  if (loss == "edge") return 1e-3;
  return 1e-2;  // ssim, hvi
}

}  // namespace

std::vector<GradCheckEntry> grad_check(const std::string& selector, int trials,
                                       uint64_t seed) {
  std::vector<std::string> losses;
  if (selector == "all")
    losses = {"charbonnier", "edge", "ssim", "hvi"};
  else
    losses = {selector};
  constexpr double kH = 1e-4;
  constexpr int kCoordSamples = 48;
  std::vector<GradCheckEntry> report;
  for (const std::string& loss : losses) {
    std::mt19937_64 rng(seed + std::hash<std::string>{}(loss));
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      GradPair pr = make_pair(loss, 16, 16, rng);
      const Image ga = loss_grad(loss, pr.y, pr.z);
      for (int sidx = 0; sidx < kCoordSamples; ++sidx) {
        const size_t idx = rng() % ga.size();
        Image zp = pr.z;
        zp.data[idx] = pr.z.data[idx] + kH;
        const double fp = loss_value(loss, pr.y, zp);
        zp.data[idx] = pr.z.data[idx] - kH;
        const double fm = loss_value(loss, pr.y, zp);
        const double gfd = (fp - fm) / (2.0 * kH);
        const double denom =
            std::max({std::fabs(gfd), std::fabs(ga.data[idx]), 1e-8});
        worst = std::max(worst, std::fabs(ga.data[idx] - gfd) / denom);
      }
    }
    report.push_back({loss, worst, loss_tolerance(loss), worst < loss_tolerance(loss)});
  }
  return report;
}

// ---- direct image fit -------------------------------------------------------

FitResult fit_image(const Image& init, const Image& reference, const LossWeights& w,
                    int iters, double step) {
  require_same_shape(init, reference, "fit_image");
  if (step <= 0.0) throw std::invalid_argument("fit_image: step-size must be > 0");
  if (iters < 0) throw std::invalid_argument("fit_image: negative iteration count");
  Image x = clamp01(init);
  FitResult res;
  res.trace.reserve(iters);
  for (int it = 0; it < iters; ++it) {
    const LossBreakdown bd = total_loss(reference, x, w, nullptr, true);
    if (!std::isfinite(bd.total))
      throw std::runtime_error("fit_image: loss diverged (NaN) at iteration " +
                               std::to_string(it));
    res.trace.push_back(bd.total);
    double gmax = 0.0;
    for (double v : bd.grad.data) gmax = std::max(gmax, std::fabs(v));
    if (gmax < 1e-14) continue;  // at the floor; trace stays flat
    double t = step / gmax;
    for (int k = 0; k < 40; ++k) {
      Image cand(x.height, x.width, x.channels);
      for (size_t i = 0; i < x.size(); ++i)
        cand.data[i] = std::clamp(x.data[i] - t * bd.grad.data[i], 0.0, 1.0);
      const double f2 = total_loss(reference, cand, w, nullptr, false).total;
      if (f2 <= bd.total) {
        x = std::move(cand);
        break;
      }
      t *= 0.5;  // keep the trace non-increasing
    }
  }
  res.image = std::move(x);
  return res;
}

}  // namespace wwe
