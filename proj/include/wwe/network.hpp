#pragma once
// Forward-only WWE-UIE graph: DWS-HINB, WEB, SGFB, WGSRB blocks and the
// U-Net backbone with the white-balance front end, plus the weight
// container, seeded random init, and parameter/FLOP accounting.

#include <cstdint>
#include <string>
#include <vector>

#include "wwe/image.hpp"

namespace wwe {

// Unbounded-range feature tensor, row-major channel-interleaved float32.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

FeatureMap image_to_feature(const Image& img);
Image feature_to_image(const FeatureMap& f);
FeatureMap pad_feature_to_even(const FeatureMap& f);
FeatureMap crop_feature(const FeatureMap& f, int h, int w);
// [a | b] along the channel axis.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

enum class BlockOrder { kWebSgfb, kSgfbWeb };

// Architecture hyperparameters and ablation toggles.
struct NetConfig {
  int base_channels = 32;      // must be even and >= 4 (HIN split)
  int num_scales = 3;          // stride-2 stages; input padded to 2^num_scales
  int channel_multiplier = 2;  // channel growth per scale
  BlockOrder block_order = BlockOrder::kWebSgfb;
  bool enable_wb_prior = true;
  bool enable_web = true;
  bool enable_sgfb_gradient_branch = true;
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
  std::string serialize() const;
  static NetConfig parse(const std::string& text);
  bool operator==(const NetConfig&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;
  size_t count() const;
};

// Named-tensor container with the embedded NetConfig. Tensor order is
// canonical (the tensor_specs order) and preserved by save/load.
struct WeightStore {
  uint32_t version = 1;
  NetConfig config;
  std::vector<Tensor> tensors;

  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  uint64_t parameter_count() const;
};

// How a tensor is initialized by init_random.
struct TensorSpec {
  std::string name;
  std::vector<uint32_t> dims;
  double uniform_bound = 0.0;  // kernels: +/- sqrt(6 / fan_in)
  float fill = 0.0f;           // used when uniform_bound == 0
  size_t count() const;
};

// Canonical tensor list (names, shapes, init rule) for a configuration.
std::vector<TensorSpec> tensor_specs(const NetConfig& config);

WeightStore init_random(const NetConfig& config, uint64_t seed);

// Binary container: magic "WWEW", u32 version=1, u32 config length +
// key=value lines, u32 tensor count; per tensor u16 name length, name,
// u8 ndim, ndim x u32 dims, row-major f32 payload. Little-endian, no
// trailing bytes.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

// ---- block-level operations ----------------------------------------------

// Depthwise 3x3 + pointwise 1x1 + bias. Kernels are stored pre-transposed
// for the inner loops: dw_t is [tap][cin], pw_t is [cin][cout].
struct DwsConvParams {
  int channels_in = 0;
  int channels_out = 0;
  std::vector<float> dw_t;
  std::vector<float> pw_t;
  std::vector<float> bias;
};

// Half-instance-norm affine terms (first channels/2 channels only).
struct HinParams {
  int channels = 0;
  std::vector<float> scale;
  std::vector<float> shift;
};

struct DwsHinbParams {
  DwsConvParams c1;
  HinParams norm;
  DwsConvParams c2;
};

struct WebParams {
  int channels = 0;
  std::vector<float> fuse_t;  // [4C][C]
  std::vector<float> fuse_bias;
  DwsHinbParams refine;
};

struct SgfbParams {
  int channels = 0;
  DwsHinbParams pre;
  DwsConvParams gate;
  DwsHinbParams post;
};

struct WgsrbParams {
  bool has_web = true;
  bool has_sgfb = true;
  BlockOrder order = BlockOrder::kWebSgfb;
  WebParams web;
  SgfbParams sgfb;
  float alpha = 0.5f;
};

FeatureMap dws_conv(const FeatureMap& x, const DwsConvParams& p);
// First half instance-normalized (eps 1e-5) then affine, second half passed
// through untouched.
FeatureMap hin(const FeatureMap& x, const HinParams& p);
// dws_conv -> HIN -> LeakyReLU(0.2) -> dws_conv, plus the block residual.
FeatureMap dws_hinb(const FeatureMap& x, const DwsHinbParams& p);
// Haar subbands -> 1x1 fusion -> refine -> x2 bilinear upsample -> residual.
FeatureMap web_forward(const FeatureMap& f_in, const WebParams& p);
// F0 = pre(x); M = sigmoid(gate(sobel_mag(F0))); blend by alpha; post.
FeatureMap sgfb_forward(const FeatureMap& f_in, const SgfbParams& p, float alpha);
FeatureMap wgsrb_forward(const FeatureMap& f_in, const WgsrbParams& p);

// f1 = f0 * min(alpha*m + (1-alpha), 1): the SGFB blend factored so the
// attenuation bound |f1| <= |f0| holds exactly in float arithmetic.
void sgfb_blend(const float* f0, const float* m, float alpha, float* f1, size_t n);

// Compiled network: tensors validated against the config and transposed
// into kernel layout once. forward() on one instance is not reentrant
// (scratch reuse); share the WeightStore and give each thread its own Model.
class Model {
 public:
  explicit Model(const WeightStore& store);
  Image forward(const Image& input) const;
  const NetConfig& config() const { return config_; }

 private:
  struct DenseConv {
    int cin = 0, cout = 0, stride = 1;
    std::vector<float> w_t;  // [tap][cin][cout]
    std::vector<float> bias;
  };
  struct DecStage {
    std::vector<float> up_t, up_bias;      // [2C][C]
    std::vector<float> fuse_t, fuse_bias;  // [2C][C]
    WgsrbParams block;
  };

  NetConfig config_;
  double gamma_[3] = {0, 0, 0};
  DenseConv stem_, head_;
  std::vector<WgsrbParams> enc_;
  std::vector<DenseConv> down_;
  WgsrbParams bott_;
  std::vector<DecStage> dec_;  // ordered from the deepest scale up
};

Image model_forward(const Image& input, const WeightStore& store);

// ---- complexity accounting ------------------------------------------------

struct CostReport {
  uint64_t parameter_count = 0;
  uint64_t flop_count = 0;  // 2 x MACs for convolutions + elementwise ops
};

struct LayerCost {
  uint64_t params = 0;
  uint64_t flops = 0;
};

// Closed forms (conv FLOPs exclude the bias add; bias is in params).
LayerCost cost_dense_conv(int h_out, int w_out, int cin, int cout, int k);
LayerCost cost_depthwise_conv(int h_out, int w_out, int c, int k);
LayerCost cost_pointwise_conv(int h_out, int w_out, int cin, int cout);

CostReport count_cost(const NetConfig& config, int input_h, int input_w);

// Table-style reference totals for the full-size model, used for the
// calibration printout (soft target, not asserted).
inline constexpr double kReferenceParamsM = 0.734;
inline constexpr double kReferenceFlopsG = 6.251;

}  // namespace wwe
