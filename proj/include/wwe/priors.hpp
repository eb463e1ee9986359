#pragma once
// The three interpretable priors as standalone operators: gray-world white
// balance with log-domain centering, one-level Haar analysis/synthesis, and
// Sobel gradient magnitude.

#include "wwe/image.hpp"

namespace wwe {

// Epsilon used by the white-balance gains, log shift, and normalization.
inline constexpr double kWbEps = 1e-6;

// Gray-world white balance:
//   per-channel means -> gray mean -> gains g_c = mu_g / (mu_c + eps),
//   then log-domain per-channel spatial-mean centering, exponentiation and
//   global min-max normalization. Output lies in [0,1]; a constant input
//   maps to all zeros (zero dynamic range).
Image white_balance(const Image& img);

// Channel-wise fusion weights, each in [0,1].
struct WbGamma {
  double r = 0.5;
  double g = 0.5;
  double b = 0.5;
};

// out_c = gamma_c * x_wb_c + (1 - gamma_c) * x_c
Image fuse_wb(const Image& x, const Image& x_wb, const WbGamma& gamma);

// Four half-resolution subband planes from one Haar analysis step.
struct SubbandSet {
  Image ll, lh, hl, hh;
};

// One-level 2D Haar analysis with the half-gain filter bank; requires even
// height and width (pad with pad_to_multiple(img, 2) first if needed).
SubbandSet haar_dwt2(const Image& img);

// Exact inverse of haar_dwt2 on even-sized inputs.
Image haar_idwt2(const SubbandSet& sb);

// Per-channel Sobel magnitude sqrt(gx^2 + gy^2), replicate padding.
Image sobel_magnitude(const Image& img);

}  // namespace wwe
