#pragma once
// Plain serial reference versions of the pixel kernels. These stay naive on
// purpose: the tests and the kernel benchmark compare the optimized OpenMP
// kernels against them.

#include <cmath>
#include <cstddef>

#include "wwe/kernels.hpp"

namespace wwe::refimpl {

template <typename T>
void pointwise_conv(const T* in, T* out, int npix, int cin, int cout,
                    const T* w_t, const T* bias) {
  for (int p = 0; p < npix; ++p)
    for (int co = 0; co < cout; ++co) {
      T acc = bias ? bias[co] : T(0);
      for (int ci = 0; ci < cin; ++ci)
        acc += in[static_cast<size_t>(p) * cin + ci] *
               w_t[static_cast<size_t>(ci) * cout + co];
      out[static_cast<size_t>(p) * cout + co] = acc;
    }
}

template <typename T>
void depthwise3x3(const T* in, T* out, int h, int w, int c, const T* k_t) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        T acc = T(0);
        for (int t = 0; t < 9; ++t) {
          int sy = kern::clampi(y + t / 3 - 1, 0, h - 1);
          int sx = kern::clampi(x + t % 3 - 1, 0, w - 1);
          acc += in[(static_cast<size_t>(sy) * w + sx) * c + ch] *
                 k_t[static_cast<size_t>(t) * c + ch];
        }
        out[(static_cast<size_t>(y) * w + x) * c + ch] = acc;
      }
}

template <typename T>
void dense_conv3x3(const T* in, int h, int w, int cin, T* out, int oh, int ow,
                   int cout, const T* w_t, const T* bias, int stride = 1) {
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int co = 0; co < cout; ++co) {
        T acc = bias ? bias[co] : T(0);
        for (int t = 0; t < 9; ++t) {
          int sy = kern::clampi(oy * stride + t / 3 - 1, 0, h - 1);
          int sx = kern::clampi(ox * stride + t % 3 - 1, 0, w - 1);
          const T* ip = in + (static_cast<size_t>(sy) * w + sx) * cin;
          const T* wt = w_t + static_cast<size_t>(t) * cin * cout;
          for (int ci = 0; ci < cin; ++ci)
            acc += ip[ci] * wt[static_cast<size_t>(ci) * cout + co];
        }
        out[(static_cast<size_t>(oy) * ow + ox) * cout + co] = acc;
      }
}

template <typename T>
void sobel_xy(const T* in, int h, int w, int c, T* gx, T* gy) {
  static const int kx[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
  static const int ky[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        T ax = T(0), ay = T(0);
        for (int t = 0; t < 9; ++t) {
          int sy = kern::clampi(y + t / 3 - 1, 0, h - 1);
          int sx = kern::clampi(x + t % 3 - 1, 0, w - 1);
          T v = in[(static_cast<size_t>(sy) * w + sx) * c + ch];
          ax += v * T(kx[t]);
          ay += v * T(ky[t]);
        }
        size_t o = (static_cast<size_t>(y) * w + x) * c + ch;
        gx[o] = ax;
        gy[o] = ay;
      }
}

template <typename T>
void bilinear_resize(const T* in, int h, int w, int c, T* out, int oh, int ow) {
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ch = 0; ch < c; ++ch) {
        double fy = (oy + 0.5) * (static_cast<double>(h) / oh) - 0.5;
        double fx = (ox + 0.5) * (static_cast<double>(w) / ow) - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        int x0 = static_cast<int>(std::floor(fx));
        T ty = static_cast<T>(fy - y0);
        T tx = static_cast<T>(fx - x0);
        int y1 = kern::clampi(y0 + 1, 0, h - 1), x1 = kern::clampi(x0 + 1, 0, w - 1);
        y0 = kern::clampi(y0, 0, h - 1);
        x0 = kern::clampi(x0, 0, w - 1);
        auto px = [&](int yy, int xx) {
          return in[(static_cast<size_t>(yy) * w + xx) * c + ch];
        };
        T top = px(y0, x0) + tx * (px(y0, x1) - px(y0, x0));
        T bot = px(y1, x0) + tx * (px(y1, x1) - px(y1, x0));
        out[(static_cast<size_t>(oy) * ow + ox) * c + ch] = top + ty * (bot - top);
      }
}

}  // namespace wwe::refimpl
