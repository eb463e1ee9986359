#pragma once
// Composite restoration objective: Charbonnier, SSIM, edge (Sobel), HVI and
// pluggable-extractor perceptual terms, each with an analytic gradient with
// respect to the prediction, plus a finite-difference verifier and a direct
// pixel-space optimization demo.

#include <cstdint>
#include <string>
#include <vector>

#include "wwe/image.hpp"

namespace wwe {

inline constexpr double kCharbonnierEps = 1e-3;

struct LossWeights {
  double c = 1.0;
  double vgg = 0.1;
  double ssim = 0.1;
  double edge = 0.4;
  double hvi = 0.5;
};

// Gradient is with respect to the prediction (second argument); empty when
// not requested.
struct LossTerm {
  double value = 0.0;
  Image grad;
};

// mean sqrt((y - y')^2 + eps^2); floor eps at y' == y.
LossTerm charbonnier(const Image& y, const Image& y_pred, bool with_grad = true);
// 1 - SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// dynamic range 1, valid-window positions, mean over channels/positions.
LossTerm ssim_loss(const Image& y, const Image& y_pred, bool with_grad = true);
// Mean squared difference of per-channel Sobel magnitudes (1e-8 inside the
// square root for differentiability). Blind to constant offsets.
LossTerm edge_loss(const Image& y, const Image& y_pred, bool with_grad = true);
// Charbonnier distance between the HVI transforms of both images. Max/min
// channel ties resolve to the first channel in R,G,B order.
LossTerm hvi_loss(const Image& y, const Image& y_pred, bool with_grad = true);

// Arbitrary-channel double tensor used for extractor features.
struct FeatureTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;
};

// Contract for the perceptual term: maps an image to N feature tensors and
// optionally backpropagates cotangents. Pretrained backbones plug in behind
// this interface.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<FeatureTensor> features(const Image& img) const = 0;
  virtual bool supports_gradient() const { return false; }
  virtual Image backprop(const Image& x,
                         const std::vector<FeatureTensor>& cotangents) const;
};

// phi = the image itself; the loss reduces to a plain L2 distance.
class IdentityExtractor : public FeatureExtractor {
 public:
  std::vector<FeatureTensor> features(const Image& img) const override;
  bool supports_gradient() const override { return true; }
  Image backprop(const Image& x,
                 const std::vector<FeatureTensor>& cotangents) const override;
};

// Fixed seeded two-layer conv stack (3->8 LeakyReLU 8->8); deterministic,
// gradient-capable, used to exercise the perceptual contract in tests.
class ToyConvExtractor : public FeatureExtractor {
 public:
  ToyConvExtractor();
  std::vector<FeatureTensor> features(const Image& img) const override;
  bool supports_gradient() const override { return true; }
  Image backprop(const Image& x,
                 const std::vector<FeatureTensor>& cotangents) const override;

 private:
  std::vector<double> w1_, b1_, w2_, b2_;  // dense 3x3 kernels [cout][cin][9]
  std::vector<FeatureTensor> run(const Image& img, FeatureTensor* pre1) const;
};

// (1/N) sum_i ||phi_i(y) - phi_i(y')||_2 with per-tensor L2 norms.
LossTerm perceptual_loss(const Image& y, const Image& y_pred,
                         const FeatureExtractor& extractor, bool with_grad = false);

struct LossBreakdown {
  double charbonnier = 0.0;
  double perceptual = 0.0;
  double ssim = 0.0;
  double edge = 0.0;
  double hvi = 0.0;
  double total = 0.0;
  bool perceptual_evaluated = false;  // false when no extractor was supplied
  Image grad;
};

// total = c*L_C + vgg*L_VGG + ssim*L_SSIM + edge*L_Edge + hvi*L_HVI.
// Without an extractor the perceptual term contributes zero and is flagged.
LossBreakdown total_loss(const Image& y, const Image& y_pred, const LossWeights& w,
                         const FeatureExtractor* extractor = nullptr,
                         bool with_grad = true);

struct GradCheckEntry {
  std::string loss;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Central differences (h = 1e-4) against the analytic gradients on seeded
// random 16x16x3 pairs; selector is one of charbonnier|edge|ssim|hvi|all.
std::vector<GradCheckEntry> grad_check(const std::string& selector, int trials,
                                       uint64_t seed);

struct FitResult {
  Image image;
  std::vector<double> trace;  // loss before each iteration's update
};

// Projected descent on the pixel values of a working image, minimizing
// total_loss against `reference` and clamping to [0,1] each step. `step` is
// the target max per-pixel movement per iteration: the update direction is
// the gradient scaled to that infinity norm, halved until the loss does not
// increase, so the trace is non-increasing by construction.
FitResult fit_image(const Image& init, const Image& reference, const LossWeights& w,
                    int iters, double step);

}  // namespace wwe
