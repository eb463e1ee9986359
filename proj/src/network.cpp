#include "wwe/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "wwe/kernels.hpp"
#include "wwe/priors.hpp"

namespace wwe {

// ---- FeatureMap helpers -----------------------------------------------------

FeatureMap image_to_feature(const Image& img) {
  FeatureMap f(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.size(); ++i) f.data[i] = static_cast<float>(img.data[i]);
  return f;
}

Image feature_to_image(const FeatureMap& f) {
  Image img(f.height, f.width, f.channels);
  for (size_t i = 0; i < f.size(); ++i) img.data[i] = f.data[i];
  return img;
}

FeatureMap pad_feature_to_even(const FeatureMap& f) {
  const int h = f.height + (f.height & 1), w = f.width + (f.width & 1);
  if (h == f.height && w == f.width) return f;
  FeatureMap out(h, w, f.channels);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, f.height - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, f.width - 1);
      const float* src = f.data.data() + (static_cast<size_t>(sy) * f.width + sx) * f.channels;
      float* dst = out.data.data() + (static_cast<size_t>(y) * w + x) * f.channels;
      for (int c = 0; c < f.channels; ++c) dst[c] = src[c];
    }
  }
  return out;
}

FeatureMap crop_feature(const FeatureMap& f, int h, int w) {
  if (h > f.height || w > f.width)
    throw std::invalid_argument("crop_feature: target larger than source");
  if (h == f.height && w == f.width) return f;
  FeatureMap out(h, w, f.channels);
  const size_t row = static_cast<size_t>(w) * f.channels;
  for (int y = 0; y < h; ++y)
    std::memcpy(out.data.data() + y * row,
                f.data.data() + (static_cast<size_t>(y) * f.width) * f.channels,
                row * sizeof(float));
  return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("concat_channels: spatial shape mismatch");
  FeatureMap out(a.height, a.width, a.channels + b.channels);
  const size_t npix = static_cast<size_t>(a.height) * a.width;
  for (size_t p = 0; p < npix; ++p) {
    float* dst = out.data.data() + p * out.channels;
    const float* pa = a.data.data() + p * a.channels;
    const float* pb = b.data.data() + p * b.channels;
    std::memcpy(dst, pa, a.channels * sizeof(float));
    std::memcpy(dst + a.channels, pb, b.channels * sizeof(float));
  }
  return out;
}

// ---- NetConfig --------------------------------------------------------------

void NetConfig::validate() const {
  if (base_channels < 4 || base_channels % 2 != 0)
    throw std::invalid_argument("NetConfig: base_channels must be even and >= 4");
  if (num_scales < 1) throw std::invalid_argument("NetConfig: num_scales must be >= 1");
  if (channel_multiplier < 1)
    throw std::invalid_argument("NetConfig: channel_multiplier must be >= 1");
  // every scale's channel count must stay even for the HIN split
  int c = base_channels;
  for (int s = 0; s < num_scales; ++s) {
    c *= channel_multiplier;
    if (c % 2 != 0 || c > (1 << 20))
      throw std::invalid_argument("NetConfig: scale channel count invalid");
  }
}

std::string NetConfig::serialize() const {
  std::ostringstream os;
  os << "base_channels=" << base_channels << "\n"
     << "num_scales=" << num_scales << "\n"
     << "channel_multiplier=" << channel_multiplier << "\n"
     << "block_order=" << (block_order == BlockOrder::kWebSgfb ? "web-sgfb" : "sgfb-web")
     << "\n"
     << "enable_wb_prior=" << (enable_wb_prior ? 1 : 0) << "\n"
     << "enable_web=" << (enable_web ? 1 : 0) << "\n"
     << "enable_sgfb_gradient_branch=" << (enable_sgfb_gradient_branch ? 1 : 0) << "\n"
     << "seed=" << seed << "\n";
  return os.str();
}

NetConfig NetConfig::parse(const std::string& text) {
  NetConfig cfg;
  int seen = 0;
  std::istringstream is(text);
  std::string line;
  auto to_int = [](const std::string& v, const char* key) {
    size_t pos = 0;
    long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::runtime_error(std::string("bad value for ") + key);
    return static_cast<int>(r);
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config blob: malformed line");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "base_channels") cfg.base_channels = to_int(val, "base_channels");
    else if (key == "num_scales") cfg.num_scales = to_int(val, "num_scales");
    else if (key == "channel_multiplier")
      cfg.channel_multiplier = to_int(val, "channel_multiplier");
    else if (key == "block_order") {
      if (val == "web-sgfb") cfg.block_order = BlockOrder::kWebSgfb;
      else if (val == "sgfb-web") cfg.block_order = BlockOrder::kSgfbWeb;
      else throw std::runtime_error("config blob: bad block_order");
    } else if (key == "enable_wb_prior") cfg.enable_wb_prior = to_int(val, key.c_str()) != 0;
    else if (key == "enable_web") cfg.enable_web = to_int(val, key.c_str()) != 0;
    else if (key == "enable_sgfb_gradient_branch")
      cfg.enable_sgfb_gradient_branch = to_int(val, key.c_str()) != 0;
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw std::runtime_error("config blob: unknown key " + key);
    ++seen;
  }
  if (seen != 8) throw std::runtime_error("config blob: wrong number of entries");
  cfg.validate();
  return cfg;
}

// ---- tensor specs -----------------------------------------------------------

size_t Tensor::count() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

size_t TensorSpec::count() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

namespace {

double kernel_bound(int fan_in) { return std::sqrt(6.0 / fan_in); }

void add_dws_specs(std::vector<TensorSpec>& v, const std::string& prefix, int c) {
  v.push_back({prefix + ".dw", {static_cast<uint32_t>(c), 3, 3}, kernel_bound(9)});
  v.push_back({prefix + ".pw",
               {static_cast<uint32_t>(c), static_cast<uint32_t>(c)},
               kernel_bound(c)});
  v.push_back({prefix + ".b", {static_cast<uint32_t>(c)}, 0.0, 0.0f});
}

void add_dwshinb_specs(std::vector<TensorSpec>& v, const std::string& prefix, int c) {
  add_dws_specs(v, prefix + ".c1", c);
  v.push_back({prefix + ".norm.scale", {static_cast<uint32_t>(c / 2)}, 0.0, 1.0f});
  v.push_back({prefix + ".norm.shift", {static_cast<uint32_t>(c / 2)}, 0.0, 0.0f});
  add_dws_specs(v, prefix + ".c2", c);
}

void add_wgsrb_specs(std::vector<TensorSpec>& v, const NetConfig& cfg,
                     const std::string& prefix, int c) {
  if (cfg.enable_web) {
    v.push_back({prefix + ".web.fuse.w",
                 {static_cast<uint32_t>(c), static_cast<uint32_t>(4 * c)},
                 kernel_bound(4 * c)});
    v.push_back({prefix + ".web.fuse.b", {static_cast<uint32_t>(c)}, 0.0, 0.0f});
    add_dwshinb_specs(v, prefix + ".web.refine", c);
  }
  if (cfg.enable_sgfb_gradient_branch) {
    add_dwshinb_specs(v, prefix + ".sgfb.pre", c);
    add_dws_specs(v, prefix + ".sgfb.gate", c);
    v.push_back({prefix + ".sgfb.alpha", {1}, 0.0, 0.5f});
    add_dwshinb_specs(v, prefix + ".sgfb.post", c);
  }
}

}  // namespace

std::vector<TensorSpec> tensor_specs(const NetConfig& cfg) {
  cfg.validate();
  std::vector<TensorSpec> v;
  const int c0 = cfg.base_channels;
  if (cfg.enable_wb_prior) v.push_back({"gamma", {3}, 0.0, 0.5f});
  v.push_back({"stem.w", {static_cast<uint32_t>(c0), 3, 3, 3}, kernel_bound(3 * 9)});
  v.push_back({"stem.b", {static_cast<uint32_t>(c0)}, 0.0, 0.0f});
  int c = c0;
  for (int s = 0; s < cfg.num_scales; ++s) {
    add_wgsrb_specs(v, cfg, "enc" + std::to_string(s), c);
    const int cn = c * cfg.channel_multiplier;
    v.push_back({"down" + std::to_string(s) + ".w",
                 {static_cast<uint32_t>(cn), static_cast<uint32_t>(c), 3, 3},
                 kernel_bound(c * 9)});
    v.push_back({"down" + std::to_string(s) + ".b", {static_cast<uint32_t>(cn)}, 0.0, 0.0f});
    c = cn;
  }
  add_wgsrb_specs(v, cfg, "bott", c);
  for (int s = cfg.num_scales - 1; s >= 0; --s) {
    const int cs = c / cfg.channel_multiplier;
    const std::string p = "dec" + std::to_string(s);
    v.push_back({p + ".up.w",
                 {static_cast<uint32_t>(cs), static_cast<uint32_t>(c)},
                 kernel_bound(c)});
    v.push_back({p + ".up.b", {static_cast<uint32_t>(cs)}, 0.0, 0.0f});
    v.push_back({p + ".fuse.w",
                 {static_cast<uint32_t>(cs), static_cast<uint32_t>(2 * cs)},
                 kernel_bound(2 * cs)});
    v.push_back({p + ".fuse.b", {static_cast<uint32_t>(cs)}, 0.0, 0.0f});
    add_wgsrb_specs(v, cfg, p + ".block", cs);
    c = cs;
  }
  v.push_back({"head.w", {3, static_cast<uint32_t>(c0), 3, 3}, kernel_bound(c0 * 9)});
  v.push_back({"head.b", {3}, 0.0, 0.0f});
  return v;
}

// ---- init / container -------------------------------------------------------

namespace {
// Deterministic uniform in [0,1) independent of the standard library's
// distribution implementation.
inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

WeightStore init_random(const NetConfig& config, uint64_t seed) {
  NetConfig cfg = config;
  cfg.seed = seed;
  cfg.validate();
  WeightStore store;
  store.config = cfg;
  std::mt19937_64 rng(seed);
  for (const TensorSpec& spec : tensor_specs(cfg)) {
    Tensor t;
    t.name = spec.name;
    t.dims = spec.dims;
    t.data.resize(spec.count());
    if (spec.uniform_bound > 0.0) {
      for (float& v : t.data)
        v = static_cast<float>((2.0 * u01(rng) - 1.0) * spec.uniform_bound);
    } else {
      std::fill(t.data.begin(), t.data.end(), spec.fill);
    }
    store.tensors.push_back(std::move(t));
  }
  return store;
}

const Tensor& WeightStore::get(const std::string& name) const {
  for (const Tensor& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error("WeightStore: missing tensor " + name);
}

bool WeightStore::has(const std::string& name) const {
  for (const Tensor& t : tensors)
    if (t.name == name) return true;
  return false;
}

uint64_t WeightStore::parameter_count() const {
  uint64_t n = 0;
  for (const Tensor& t : tensors) n += t.count();
  return n;
}

namespace {

constexpr char kMagic[4] = {'W', 'W', 'E', 'W'};

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(out, u);
}

struct Reader {
  const unsigned char* p;
  size_t n;
  size_t off = 0;
  explicit Reader(const std::string& s)
      : p(reinterpret_cast<const unsigned char*>(s.data())), n(s.size()) {}
  void need(size_t k) const {
    if (off + k > n) throw std::runtime_error("weight file: truncated payload");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(p[off] | (p[off + 1] << 8));
    off += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  uint8_t u8() {
    need(1);
    return p[off++];
  }
  float f32() {
    uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  std::string str(size_t k) {
    need(k);
    std::string s(reinterpret_cast<const char*>(p + off), k);
    off += k;
    return s;
  }
};

void validate_store(const WeightStore& store) {
  const std::vector<TensorSpec> specs = tensor_specs(store.config);
  if (store.tensors.size() != specs.size())
    throw std::runtime_error("weight store: tensor set does not match config");
  for (size_t i = 0; i < specs.size(); ++i) {
    const Tensor& t = store.tensors[i];
    if (t.name != specs[i].name || t.dims != specs[i].dims)
      throw std::runtime_error("weight store: tensor " + specs[i].name +
                               " missing or mis-shaped");
    if (t.data.size() != specs[i].count())
      throw std::runtime_error("weight store: tensor " + t.name + " payload size mismatch");
    for (float v : t.data)
      if (!std::isfinite(v))
        throw std::runtime_error("weight store: non-finite value in " + t.name);
  }
  auto in01 = [&](const char* name) {
    if (!store.has(name)) return;
    for (float v : store.get(name).data)
      if (v < 0.0f || v > 1.0f)
        throw std::runtime_error(std::string("weight store: ") + name + " outside [0,1]");
  };
  in01("gamma");
  for (const Tensor& t : store.tensors)
    if (t.name.size() > 6 && t.name.substr(t.name.size() - 6) == ".alpha")
      for (float v : t.data)
        if (v < 0.0f || v > 1.0f)
          throw std::runtime_error("weight store: " + t.name + " outside [0,1]");
}

}  // namespace

void save_weights(const WeightStore& store, const std::string& path) {
  validate_store(store);
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, store.version);
  const std::string cfg = store.config.serialize();
  put_u32(buf, static_cast<uint32_t>(cfg.size()));
  buf += cfg;
  put_u32(buf, static_cast<uint32_t>(store.tensors.size()));
  for (const Tensor& t : store.tensors) {
    put_u16(buf, static_cast<uint16_t>(t.name.size()));
    buf += t.name;
    buf.push_back(static_cast<char>(t.dims.size()));
    for (uint32_t d : t.dims) put_u32(buf, d);
    for (float v : t.data) put_f32(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": unwritable path");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": unreadable file");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(blob);
  if (r.str(4) != std::string(kMagic, 4))
    throw std::runtime_error(path + ": bad magic");
  WeightStore store;
  store.version = r.u32();
  if (store.version != 1)
    throw std::runtime_error(path + ": unsupported format version");
  const uint32_t cfg_len = r.u32();
  store.config = NetConfig::parse(r.str(cfg_len));
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.str(r.u16());
    const uint8_t ndim = r.u8();
    if (ndim == 0 || ndim > 8)
      throw std::runtime_error(path + ": bad tensor rank for " + t.name);
    size_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      uint32_t dim = r.u32();
      if (dim == 0) throw std::runtime_error(path + ": zero dimension in " + t.name);
      t.dims.push_back(dim);
      n *= dim;
    }
    r.need(n * 4);
    t.data.resize(n);
    for (size_t k = 0; k < n; ++k) t.data[k] = r.f32();
    store.tensors.push_back(std::move(t));
  }
  if (r.off != r.n) throw std::runtime_error(path + ": trailing bytes forbidden");
  validate_store(store);
  return store;
}

// ---- block forwards ---------------------------------------------------------

FeatureMap dws_conv(const FeatureMap& x, const DwsConvParams& p) {
  if (x.channels != p.channels_in)
    throw std::invalid_argument("dws_conv: channel mismatch");
  if (p.dw_t.size() != static_cast<size_t>(9) * p.channels_in ||
      p.pw_t.size() != static_cast<size_t>(p.channels_in) * p.channels_out ||
      p.bias.size() != static_cast<size_t>(p.channels_out))
    throw std::invalid_argument("dws_conv: weight shape mismatch");
  FeatureMap mid(x.height, x.width, x.channels);
  kern::depthwise3x3(x.data.data(), mid.data.data(), x.height, x.width, x.channels,
                     p.dw_t.data());
  FeatureMap out(x.height, x.width, p.channels_out);
  kern::pointwise_conv(mid.data.data(), out.data.data(), x.height * x.width,
                       p.channels_in, p.channels_out, p.pw_t.data(), p.bias.data());
  return out;
}

FeatureMap hin(const FeatureMap& x, const HinParams& p) {
  if (x.channels % 2 != 0) throw std::invalid_argument("hin: odd channel count");
  if (p.channels != x.channels ||
      p.scale.size() != static_cast<size_t>(x.channels / 2) ||
      p.shift.size() != static_cast<size_t>(x.channels / 2))
    throw std::invalid_argument("hin: affine shape mismatch");
  const int half = x.channels / 2, c = x.channels;
  const size_t npix = static_cast<size_t>(x.height) * x.width;
  std::vector<double> mean(half), inv_std(half);
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int ch = 0; ch < half; ++ch) {
    double s = 0.0, s2 = 0.0;
    for (size_t pix = 0; pix < npix; ++pix) {
      const double v = x.data[pix * c + ch];
      s += v;
      s2 += v * v;
    }
    const double m = s / static_cast<double>(npix);
    double var = s2 / static_cast<double>(npix) - m * m;
    if (var < 0.0) var = 0.0;
    mean[ch] = m;
    inv_std[ch] = 1.0 / std::sqrt(var + 1e-5);
  }
  FeatureMap out = x;  // pass-through half stays bitwise identical
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (long pix = 0; pix < static_cast<long>(npix); ++pix)
    for (int ch = 0; ch < half; ++ch) {
      const double vhat = (x.data[pix * c + ch] - mean[ch]) * inv_std[ch];
      out.data[pix * c + ch] = p.scale[ch] * static_cast<float>(vhat) + p.shift[ch];
    }
  return out;
}

namespace {

void leaky_relu_inplace(FeatureMap& f, float slope) {
  const int nt = threads();
  const long n = static_cast<long>(f.size());
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (long i = 0; i < n; ++i) {
    const float v = f.data[i];
    f.data[i] = v < 0.0f ? slope * v : v;
  }
}

void add_inplace(FeatureMap& f, const FeatureMap& g) {
  const long n = static_cast<long>(f.size());
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (long i = 0; i < n; ++i) f.data[i] += g.data[i];
}

}  // namespace

FeatureMap dws_hinb(const FeatureMap& x, const DwsHinbParams& p) {
  FeatureMap t = dws_conv(x, p.c1);
  t = hin(t, p.norm);
  leaky_relu_inplace(t, 0.2f);
  t = dws_conv(t, p.c2);
  add_inplace(t, x);
  return t;
}

FeatureMap web_forward(const FeatureMap& f_in, const WebParams& p) {
  if (f_in.channels != p.channels)
    throw std::invalid_argument("web_forward: channel mismatch with weights");
  const FeatureMap x =
      (f_in.height % 2 || f_in.width % 2) ? pad_feature_to_even(f_in) : f_in;
  const int h2 = x.height / 2, w2 = x.width / 2, c = x.channels;
  FeatureMap stacked(h2, w2, 4 * c);
  kern::haar_dwt2_stacked(x.data.data(), x.height, x.width, c, stacked.data.data());
  FeatureMap fused(h2, w2, c);
  kern::pointwise_conv(stacked.data.data(), fused.data.data(), h2 * w2, 4 * c, c,
                       p.fuse_t.data(), p.fuse_bias.data());
  const FeatureMap refined = dws_hinb(fused, p.refine);
  FeatureMap up(x.height, x.width, c);
  kern::bilinear_resize(refined.data.data(), h2, w2, c, up.data.data(), x.height,
                        x.width);
  FeatureMap out = crop_feature(up, f_in.height, f_in.width);
  add_inplace(out, f_in);
  return out;
}

void sgfb_blend(const float* f0, const float* m, float alpha, float* f1, size_t n) {
  const float oma = 1.0f - alpha;
  const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    float factor = alpha * m[i] + oma;
    if (factor > 1.0f) factor = 1.0f;  // strip rounding dust; math keeps it <= 1
    f1[i] = f0[i] * factor;
  }
}

FeatureMap sgfb_forward(const FeatureMap& f_in, const SgfbParams& p, float alpha) {
  if (alpha < 0.0f || alpha > 1.0f)
    throw std::invalid_argument("sgfb_forward: alpha outside [0,1]");
  const FeatureMap f0 = dws_hinb(f_in, p.pre);
  const size_t n = f0.size();
  std::vector<float> gx(n), gy(n);
  kern::sobel_xy(f0.data.data(), f0.height, f0.width, f0.channels, gx.data(), gy.data());
  FeatureMap grad(f0.height, f0.width, f0.channels);
  {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long i = 0; i < static_cast<long>(n); ++i)
      grad.data[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  }
  FeatureMap gate = dws_conv(grad, p.gate);
  {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long i = 0; i < static_cast<long>(gate.size()); ++i)
      gate.data[i] = 1.0f / (1.0f + std::exp(-gate.data[i]));
  }
  FeatureMap f1(f0.height, f0.width, f0.channels);
  sgfb_blend(f0.data.data(), gate.data.data(), alpha, f1.data.data(), n);
  return dws_hinb(f1, p.post);
}

FeatureMap wgsrb_forward(const FeatureMap& f_in, const WgsrbParams& p) {
  auto web = [&](const FeatureMap& f) { return p.has_web ? web_forward(f, p.web) : f; };
  auto sgfb = [&](const FeatureMap& f) {
    return p.has_sgfb ? sgfb_forward(f, p.sgfb, p.alpha) : f;
  };
  if (p.order == BlockOrder::kWebSgfb) return sgfb(web(f_in));
  return web(sgfb(f_in));
}

// ---- Model ------------------------------------------------------------------

namespace {

std::vector<float> transpose_pointwise(const Tensor& t) {
  // [cout][cin] -> [cin][cout]
  const int cout = static_cast<int>(t.dims[0]), cin = static_cast<int>(t.dims[1]);
  std::vector<float> out(t.data.size());
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      out[static_cast<size_t>(ci) * cout + co] = t.data[static_cast<size_t>(co) * cin + ci];
  return out;
}

std::vector<float> transpose_depthwise(const Tensor& t) {
  // [c][3][3] -> [tap][c]
  const int c = static_cast<int>(t.dims[0]);
  std::vector<float> out(t.data.size());
  for (int ch = 0; ch < c; ++ch)
    for (int tap = 0; tap < 9; ++tap)
      out[static_cast<size_t>(tap) * c + ch] = t.data[static_cast<size_t>(ch) * 9 + tap];
  return out;
}

std::vector<float> transpose_dense(const Tensor& t) {
  // [cout][cin][3][3] -> [tap][cin][cout]
  const int cout = static_cast<int>(t.dims[0]), cin = static_cast<int>(t.dims[1]);
  std::vector<float> out(t.data.size());
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int tap = 0; tap < 9; ++tap)
        out[(static_cast<size_t>(tap) * cin + ci) * cout + co] =
            t.data[(static_cast<size_t>(co) * cin + ci) * 9 + tap];
  return out;
}

DwsConvParams load_dws(const WeightStore& s, const std::string& prefix, int c) {
  DwsConvParams p;
  p.channels_in = c;
  p.channels_out = c;
  p.dw_t = transpose_depthwise(s.get(prefix + ".dw"));
  p.pw_t = transpose_pointwise(s.get(prefix + ".pw"));
  p.bias = s.get(prefix + ".b").data;
  return p;
}

DwsHinbParams load_dwshinb(const WeightStore& s, const std::string& prefix, int c) {
  DwsHinbParams p;
  p.c1 = load_dws(s, prefix + ".c1", c);
  p.norm.channels = c;
  p.norm.scale = s.get(prefix + ".norm.scale").data;
  p.norm.shift = s.get(prefix + ".norm.shift").data;
  p.c2 = load_dws(s, prefix + ".c2", c);
  return p;
}

WgsrbParams load_wgsrb(const WeightStore& s, const std::string& prefix, int c) {
  const NetConfig& cfg = s.config;
  WgsrbParams p;
  p.has_web = cfg.enable_web;
  p.has_sgfb = cfg.enable_sgfb_gradient_branch;
  p.order = cfg.block_order;
  if (p.has_web) {
    p.web.channels = c;
    p.web.fuse_t = transpose_pointwise(s.get(prefix + ".web.fuse.w"));
    p.web.fuse_bias = s.get(prefix + ".web.fuse.b").data;
    p.web.refine = load_dwshinb(s, prefix + ".web.refine", c);
  }
  if (p.has_sgfb) {
    p.sgfb.channels = c;
    p.sgfb.pre = load_dwshinb(s, prefix + ".sgfb.pre", c);
    p.sgfb.gate = load_dws(s, prefix + ".sgfb.gate", c);
    p.sgfb.post = load_dwshinb(s, prefix + ".sgfb.post", c);
    p.alpha = s.get(prefix + ".sgfb.alpha").data[0];
  }
  return p;
}

}  // namespace

Model::Model(const WeightStore& store) : config_(store.config) {
  validate_store(store);
  const NetConfig& cfg = config_;
  const int c0 = cfg.base_channels;
  if (cfg.enable_wb_prior) {
    const Tensor& g = store.get("gamma");
    for (int i = 0; i < 3; ++i) gamma_[i] = g.data[i];
  }
  stem_ = {3, c0, 1, transpose_dense(store.get("stem.w")), store.get("stem.b").data};
  int c = c0;
  for (int s = 0; s < cfg.num_scales; ++s) {
    enc_.push_back(load_wgsrb(store, "enc" + std::to_string(s), c));
    const int cn = c * cfg.channel_multiplier;
    down_.push_back({c, cn, 2, transpose_dense(store.get("down" + std::to_string(s) + ".w")),
                     store.get("down" + std::to_string(s) + ".b").data});
    c = cn;
  }
  bott_ = load_wgsrb(store, "bott", c);
  for (int s = cfg.num_scales - 1; s >= 0; --s) {
    const int cs = c / cfg.channel_multiplier;
    const std::string p = "dec" + std::to_string(s);
    DecStage stage;
    stage.up_t = transpose_pointwise(store.get(p + ".up.w"));
    stage.up_bias = store.get(p + ".up.b").data;
    stage.fuse_t = transpose_pointwise(store.get(p + ".fuse.w"));
    stage.fuse_bias = store.get(p + ".fuse.b").data;
    stage.block = load_wgsrb(store, p + ".block", cs);
    dec_.push_back(std::move(stage));
    c = cs;
  }
  head_ = {c0, 3, 1, transpose_dense(store.get("head.w")), store.get("head.b").data};
}

Image Model::forward(const Image& input) const {
  if (input.channels != 3)
    throw std::invalid_argument("model_forward: 3-channel input required");
  const NetConfig& cfg = config_;
  Image fused = cfg.enable_wb_prior
                    ? fuse_wb(input, white_balance(input),
                              WbGamma{gamma_[0], gamma_[1], gamma_[2]})
                    : input;
  const Image padded = pad_to_multiple(fused, 1 << cfg.num_scales);
  FeatureMap a = image_to_feature(padded);

  auto dense = [](const FeatureMap& x, const DenseConv& d) {
    const int oh = (x.height + d.stride - 1) / d.stride;
    const int ow = (x.width + d.stride - 1) / d.stride;
    FeatureMap out(oh, ow, d.cout);
    kern::dense_conv3x3(x.data.data(), x.height, x.width, d.cin, out.data.data(), oh,
                        ow, d.cout, d.w_t.data(), d.bias.data(), d.stride);
    return out;
  };

  a = dense(a, stem_);
  std::vector<FeatureMap> skips;
  for (int s = 0; s < cfg.num_scales; ++s) {
    FeatureMap e = wgsrb_forward(a, enc_[s]);
    a = dense(e, down_[s]);
    skips.push_back(std::move(e));
  }
  a = wgsrb_forward(a, bott_);
  for (int i = 0; i < cfg.num_scales; ++i) {
    const DecStage& st = dec_[i];
    const FeatureMap& skip = skips[cfg.num_scales - 1 - i];
    FeatureMap up(skip.height, skip.width, a.channels);
    kern::bilinear_resize(a.data.data(), a.height, a.width, a.channels,
                          up.data.data(), skip.height, skip.width);
    FeatureMap reduced(up.height, up.width, skip.channels);
    kern::pointwise_conv(up.data.data(), reduced.data.data(), up.height * up.width,
                         up.channels, skip.channels, st.up_t.data(), st.up_bias.data());
    FeatureMap cat = concat_channels(reduced, skip);
    FeatureMap fusedf(cat.height, cat.width, skip.channels);
    kern::pointwise_conv(cat.data.data(), fusedf.data.data(), cat.height * cat.width,
                         cat.channels, skip.channels, st.fuse_t.data(),
                         st.fuse_bias.data());
    a = wgsrb_forward(fusedf, st.block);
  }
  a = dense(a, head_);

  // Global residual and clamp, done in double on the unpadded fused input.
  Image out(input.height, input.width, 3);
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = fused.at(y, x, c) + static_cast<double>(a.at(y, x, c));
        out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
  return out;
}

Image model_forward(const Image& input, const WeightStore& store) {
  return Model(store).forward(input);
}

// ---- complexity accounting ---------------------------------------------------

LayerCost cost_dense_conv(int h_out, int w_out, int cin, int cout, int k) {
  const uint64_t hw = static_cast<uint64_t>(h_out) * w_out;
  return {static_cast<uint64_t>(cin) * cout * k * k + cout,
          2 * hw * cin * cout * k * k};
}

LayerCost cost_depthwise_conv(int h_out, int w_out, int c, int k) {
  const uint64_t hw = static_cast<uint64_t>(h_out) * w_out;
  return {static_cast<uint64_t>(c) * k * k, 2 * hw * c * k * k};
}

LayerCost cost_pointwise_conv(int h_out, int w_out, int cin, int cout) {
  const uint64_t hw = static_cast<uint64_t>(h_out) * w_out;
  return {static_cast<uint64_t>(cin) * cout + cout, 2 * hw * cin * cout};
}

namespace {

uint64_t dwshinb_flops(int h, int w, int c) {
  const uint64_t hw = static_cast<uint64_t>(h) * w;
  uint64_t f = 0;
  f += 2 * (cost_depthwise_conv(h, w, c, 3).flops + cost_pointwise_conv(h, w, c, c).flops);
  f += 2 * hw * c;               // the two bias adds
  f += 6 * hw * (c / 2);         // instance-norm stats + normalize + affine
  f += hw * c;                   // leaky relu
  f += hw * c;                   // residual add
  return f;
}

uint64_t wgsrb_flops(const NetConfig& cfg, int h, int w, int c) {
  uint64_t f = 0;
  const uint64_t hw = static_cast<uint64_t>(h) * w;
  if (cfg.enable_web) {
    const int hp = h + (h & 1), wp = w + (w & 1);
    const int h2 = hp / 2, w2 = wp / 2;
    const uint64_t hw2 = static_cast<uint64_t>(h2) * w2;
    f += 2 * hw2 * c * 16;  // Haar analysis: 4 bands x 4 MACs per coefficient
    f += cost_pointwise_conv(h2, w2, 4 * c, c).flops + hw2 * c;
    f += dwshinb_flops(h2, w2, c);
    f += static_cast<uint64_t>(hp) * wp * c * 8;  // x2 bilinear upsample
    f += hw * c;                                  // residual add
  }
  if (cfg.enable_sgfb_gradient_branch) {
    f += dwshinb_flops(h, w, c);          // pre
    f += 2 * hw * c * 9 * 2;              // the two Sobel taps
    f += 4 * hw * c;                      // gradient magnitude
    f += cost_depthwise_conv(h, w, c, 3).flops + cost_pointwise_conv(h, w, c, c).flops +
         hw * c;                          // gate dws conv + bias
    f += hw * c;                          // sigmoid
    f += 4 * hw * c;                      // blend
    f += dwshinb_flops(h, w, c);          // post
  }
  return f;
}

}  // namespace

CostReport count_cost(const NetConfig& cfg, int input_h, int input_w) {
  cfg.validate();
  if (input_h < 2 || input_w < 2)
    throw std::invalid_argument("count_cost: degenerate input size");
  CostReport rep;
  for (const TensorSpec& s : tensor_specs(cfg)) rep.parameter_count += s.count();

  const int m = 1 << cfg.num_scales;
  const int H = (input_h + m - 1) / m * m;
  const int W = (input_w + m - 1) / m * m;
  const uint64_t hw = static_cast<uint64_t>(H) * W;
  uint64_t f = 0;
  if (cfg.enable_wb_prior) f += hw * 3 * 6 + hw * 3 * 3;  // white balance + fusion
  f += cost_dense_conv(H, W, 3, cfg.base_channels, 3).flops + hw * cfg.base_channels;

  int c = cfg.base_channels, h = H, w = W;
  for (int s = 0; s < cfg.num_scales; ++s) {
    f += wgsrb_flops(cfg, h, w, c);
    const int hn = (h + 1) / 2, wn = (w + 1) / 2, cn = c * cfg.channel_multiplier;
    f += cost_dense_conv(hn, wn, c, cn, 3).flops + static_cast<uint64_t>(hn) * wn * cn;
    c = cn;
    h = hn;
    w = wn;
  }
  f += wgsrb_flops(cfg, h, w, c);
  for (int s = cfg.num_scales - 1; s >= 0; --s) {
    const int cs = c / cfg.channel_multiplier;
    const int hu = 2 * h, wu = 2 * w;
    const uint64_t hwu = static_cast<uint64_t>(hu) * wu;
    f += hwu * c * 8;  // bilinear upsample
    f += cost_pointwise_conv(hu, wu, c, cs).flops + hwu * cs;   // channel reduce
    f += cost_pointwise_conv(hu, wu, 2 * cs, cs).flops + hwu * cs;  // skip fuse
    f += wgsrb_flops(cfg, hu, wu, cs);
    c = cs;
    h = hu;
    w = wu;
  }
  f += cost_dense_conv(H, W, cfg.base_channels, 3, 3).flops + hw * 3;
  f += hw * 3 * 2;  // global residual + clamp
  rep.flop_count = f;
  return rep;
}

}  // namespace wwe
