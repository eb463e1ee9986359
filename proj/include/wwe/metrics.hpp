#pragma once
// Full- and no-reference evaluation: PSNR, SSIM, UCIQE and color-chart
// CIEDE2000 scoring.

#include <optional>
#include <string>
#include <vector>

#include "wwe/image.hpp"

namespace wwe {

struct MetricReport {
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> uciqe;
  std::optional<double> ciede2000_mean;
};

// 10*log10(1/MSE) with peak 1, capped at 100 dB (zero MSE hits the cap).
double psnr(const Image& y, const Image& y_pred);

// Same statistics pipeline as losses::ssim_loss (single shared
// implementation); returns the similarity, not the loss.
double ssim(const Image& y, const Image& y_pred);

// 0.4680 * sigma_c/100 + 0.2745 * (L99 - L1)/100 + 0.2576 * mean saturation,
// with chroma/lightness from CIELab and saturation from HSV.
double uciqe(const Image& img);

// Rectangle in pixels, half-open ([x0,x1) x [y0,y1)), plus the patch's
// reference color as an sRGB triple in [0,1].
struct Patch {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double r = 0, g = 0, b = 0;
};
using PatchSpec = std::vector<Patch>;

// CSV with header "x0,y0,x1,y1,R,G,B".
PatchSpec load_patch_csv(const std::string& path);

// Mean over patches of CIEDE2000 between the patch's mean color and its
// reference, both converted through the same sRGB -> Lab pipeline.
double chart_eval(const Image& img, const PatchSpec& patches);

}  // namespace wwe
