#pragma once
// Data-parallel pixel kernels shared by the priors, network, and loss code.
//
// Every kernel computes each output element with a fixed accumulation order;
// OpenMP only partitions output rows or pixels. Results are therefore bitwise
// identical for any thread count, including the serial path.
//
// Layout convention everywhere: row-major, channel-interleaved (HWC).

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace wwe {

// Global worker count for the kernels below. 1 (the default) runs serial.
void set_threads(int n);
int threads();

namespace kern {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// out[p][co] = bias[co] + sum_ci in[p][ci] * w_t[ci*cout+co]
// w_t is the pointwise kernel transposed to [cin][cout] so the co loop is a
// unit-stride FMA chain. `accumulate` adds into `out` instead of writing it.
template <typename T>
void pointwise_conv(const T* in, T* out, int npix, int cin, int cout,
                    const T* w_t, const T* bias, bool accumulate = false) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int p = 0; p < npix; ++p) {
    const T* ip = in + static_cast<size_t>(p) * cin;
    T* op = out + static_cast<size_t>(p) * cout;
    if (!accumulate) {
      if (bias)
        for (int co = 0; co < cout; ++co) op[co] = bias[co];
      else
        for (int co = 0; co < cout; ++co) op[co] = T(0);
    }
    int ci = 0;
    for (; ci + 4 <= cin; ci += 4) {
      const T a0 = ip[ci], a1 = ip[ci + 1], a2 = ip[ci + 2], a3 = ip[ci + 3];
      const T* w0 = w_t + static_cast<size_t>(ci) * cout;
      const T* w1 = w0 + cout;
      const T* w2 = w1 + cout;
      const T* w3 = w2 + cout;
      for (int co = 0; co < cout; ++co)
        op[co] += a0 * w0[co] + a1 * w1[co] + a2 * w2[co] + a3 * w3[co];
    }
    for (; ci < cin; ++ci) {
      const T a = ip[ci];
      const T* w = w_t + static_cast<size_t>(ci) * cout;
      for (int co = 0; co < cout; ++co) op[co] += a * w[co];
    }
  }
}

// Per-channel 3x3 correlation, replicate padding, stride 1.
// k_t holds the kernels transposed to [tap][channel].
template <typename T>
void depthwise3x3(const T* in, T* out, int h, int w, int c, const T* k_t) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int y = 0; y < h; ++y) {
    const int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
    const int rows[3] = {ym, y, yp};
    for (int x = 0; x < w; ++x) {
      const int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
      const int cols[3] = {xm, x, xp};
      T* op = out + (static_cast<size_t>(y) * w + x) * c;
      for (int ch = 0; ch < c; ++ch) op[ch] = T(0);
      for (int t = 0; t < 9; ++t) {
        const T* ip = in + (static_cast<size_t>(rows[t / 3]) * w + cols[t % 3]) * c;
        const T* kt = k_t + static_cast<size_t>(t) * c;
        for (int ch = 0; ch < c; ++ch) op[ch] += ip[ch] * kt[ch];
      }
    }
  }
}

// Dense 3x3 correlation, replicate padding, arbitrary stride.
// w_t is [tap][cin][cout]; output size is ceil(h/stride) x ceil(w/stride).
template <typename T>
void dense_conv3x3(const T* in, int h, int w, int cin, T* out, int oh, int ow,
                   int cout, const T* w_t, const T* bias, int stride = 1) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int oy = 0; oy < oh; ++oy) {
    const int cy = oy * stride;
    const int rows[3] = {clampi(cy - 1, 0, h - 1), cy, clampi(cy + 1, 0, h - 1)};
    for (int ox = 0; ox < ow; ++ox) {
      const int cx = ox * stride;
      const int cols[3] = {clampi(cx - 1, 0, w - 1), cx, clampi(cx + 1, 0, w - 1)};
      T* op = out + (static_cast<size_t>(oy) * ow + ox) * cout;
      if (bias)
        for (int co = 0; co < cout; ++co) op[co] = bias[co];
      else
        for (int co = 0; co < cout; ++co) op[co] = T(0);
      for (int t = 0; t < 9; ++t) {
        const T* ip = in + (static_cast<size_t>(rows[t / 3]) * w + cols[t % 3]) * cin;
        const T* wt = w_t + static_cast<size_t>(t) * cin * cout;
        for (int ci = 0; ci < cin; ++ci) {
          const T a = ip[ci];
          const T* wr = wt + static_cast<size_t>(ci) * cout;
          for (int co = 0; co < cout; ++co) op[co] += a * wr[co];
        }
      }
    }
  }
}

// Horizontal/vertical Sobel responses per channel (correlation with the
// standard +/-1, +/-2 stencils, replicate padding).
template <typename T>
void sobel_xy(const T* in, int h, int w, int c, T* gx, T* gy) {
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int y = 0; y < h; ++y) {
    const int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
      const size_t o = (static_cast<size_t>(y) * w + x) * c;
      const T* r0 = in + (static_cast<size_t>(ym) * w) * c;
      const T* r1 = in + (static_cast<size_t>(y) * w) * c;
      const T* r2 = in + (static_cast<size_t>(yp) * w) * c;
      const size_t cm = static_cast<size_t>(xm) * c, cc = static_cast<size_t>(x) * c,
                   cp = static_cast<size_t>(xp) * c;
      for (int ch = 0; ch < c; ++ch) {
        const T a = r0[cm + ch], b = r0[cc + ch], d = r0[cp + ch];
        const T e = r1[cm + ch], f = r1[cp + ch];
        const T g = r2[cm + ch], i = r2[cc + ch], j = r2[cp + ch];
        gx[o + ch] = (d - a) + T(2) * (f - e) + (j - g);
        gy[o + ch] = (g - a) + T(2) * (i - b) + (j - d);
      }
    }
  }
}

namespace haar {
// 2x2 analysis of one block (a b / c d) with the half-gain filter bank.
template <typename T>
inline void analyze(T a, T b, T c, T d, T& ll, T& lh, T& hl, T& hh) {
  ll = (a + b + c + d) * T(0.25);
  lh = (a + b - c - d) * T(0.25);
  hl = (a - b + c - d) * T(0.25);
  hh = (a - b - c + d) * T(0.25);
}
}  // namespace haar

// One-level 2D Haar analysis into four separate half-resolution planes,
// each channel-interleaved. h and w must be even.
template <typename T>
void haar_dwt2(const T* in, int h, int w, int c, T* ll, T* lh, T* hl, T* hh) {
  const int h2 = h / 2, w2 = w / 2;
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const T* r0 = in + (static_cast<size_t>(2 * y) * w + 2 * x) * c;
      const T* r1 = in + (static_cast<size_t>(2 * y + 1) * w + 2 * x) * c;
      const size_t o = (static_cast<size_t>(y) * w2 + x) * c;
      for (int ch = 0; ch < c; ++ch)
        haar::analyze(r0[ch], r0[c + ch], r1[ch], r1[c + ch],
                      ll[o + ch], lh[o + ch], hl[o + ch], hh[o + ch]);
    }
  }
}

// Same analysis but stacked as 4c channels at half resolution in band-major
// order [LL | LH | HL | HH], each band keeping the source channel order.
template <typename T>
void haar_dwt2_stacked(const T* in, int h, int w, int c, T* out) {
  const int h2 = h / 2, w2 = w / 2;
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const T* r0 = in + (static_cast<size_t>(2 * y) * w + 2 * x) * c;
      const T* r1 = in + (static_cast<size_t>(2 * y + 1) * w + 2 * x) * c;
      T* op = out + (static_cast<size_t>(y) * w2 + x) * (4 * c);
      for (int ch = 0; ch < c; ++ch)
        haar::analyze(r0[ch], r0[c + ch], r1[ch], r1[c + ch],
                      op[ch], op[c + ch], op[2 * c + ch], op[3 * c + ch]);
    }
  }
}

// Exact inverse of haar_dwt2: each 2x2 block is rebuilt from the four
// coefficients with the sign pattern induced by the analysis kernels.
template <typename T>
void haar_idwt2(const T* ll, const T* lh, const T* hl, const T* hh, int h2,
                int w2, int c, T* out) {
  const int w = 2 * w2;
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const size_t i = (static_cast<size_t>(y) * w2 + x) * c;
      T* r0 = out + (static_cast<size_t>(2 * y) * w + 2 * x) * c;
      T* r1 = out + (static_cast<size_t>(2 * y + 1) * w + 2 * x) * c;
      for (int ch = 0; ch < c; ++ch) {
        const T a = ll[i + ch], b = lh[i + ch], d = hl[i + ch], e = hh[i + ch];
        r0[ch] = a + b + d + e;
        r0[c + ch] = a + b - d - e;
        r1[ch] = a - b + d - e;
        r1[c + ch] = a - b - d + e;
      }
    }
  }
}

// Bilinear resampling with half-pixel-centered coordinates and edge clamping.
// The lerp form keeps constants and identity resizes exact.
template <typename T>
void bilinear_resize(const T* in, int h, int w, int c, T* out, int oh, int ow) {
  const double sy = static_cast<double>(h) / oh;
  const double sx = static_cast<double>(w) / ow;
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int oy = 0; oy < oh; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    T ty = static_cast<T>(fy - y0);
    int y1 = clampi(y0 + 1, 0, h - 1);
    y0 = clampi(y0, 0, h - 1);
    for (int ox = 0; ox < ow; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      T tx = static_cast<T>(fx - x0);
      int x1 = clampi(x0 + 1, 0, w - 1);
      x0 = clampi(x0, 0, w - 1);
      const T* p00 = in + (static_cast<size_t>(y0) * w + x0) * c;
      const T* p01 = in + (static_cast<size_t>(y0) * w + x1) * c;
      const T* p10 = in + (static_cast<size_t>(y1) * w + x0) * c;
      const T* p11 = in + (static_cast<size_t>(y1) * w + x1) * c;
      T* op = out + (static_cast<size_t>(oy) * ow + ox) * c;
      for (int ch = 0; ch < c; ++ch) {
        T top = p00[ch] + tx * (p01[ch] - p00[ch]);
        T bot = p10[ch] + tx * (p11[ch] - p10[ch]);
        op[ch] = top + ty * (bot - top);
      }
    }
  }
}

}  // namespace kern
}  // namespace wwe
