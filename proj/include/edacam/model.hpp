#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <edacam/errors.hpp>
#include <edacam/io.hpp>
#include <edacam/nn.hpp>
#include <edacam/preprocess.hpp>
#include <edacam/rng.hpp>
#include <edacam/tensor.hpp>

namespace edacam {

struct ModelConfig {
  std::size_t in_channels = 3;
  std::array<std::size_t, 3> channels = {16, 32, 64};
  std::size_t T = 768;
  std::size_t reduction = 16;
  std::size_t resolution = 72;
  std::uint64_t seed = 1;

  void validate() const {
    if (T % 4 != 0) throw ConfigError("model: T must be divisible by 4");
    if (reduction == 0) throw ConfigError("model: reduction must be positive");
    if ((T / 4) % reduction != 0 || (T / 2) % reduction != 0)
      throw ConfigError("model: reduction must divide T/4 and T/2");
    if (in_channels == 0 || channels[0] == 0 || channels[1] == 0 || channels[2] == 0)
      throw ConfigError("model: channel widths must be positive");
    if (resolution < 16) throw ConfigError("model: resolution must be at least 16");
  }
};

inline void to_json(json& j, const ModelConfig& c) {
  j = json{{"in_channels", c.in_channels}, {"channels", c.channels},
           {"T", c.T},                     {"reduction", c.reduction},
           {"resolution", c.resolution},   {"seed", c.seed}};
}

inline void from_json(const json& j, ModelConfig& c) {
  j.at("in_channels").get_to(c.in_channels);
  j.at("channels").get_to(c.channels);
  j.at("T").get_to(c.T);
  j.at("reduction").get_to(c.reduction);
  j.at("resolution").get_to(c.resolution);
  j.at("seed").get_to(c.seed);
}

namespace nn {

// Temporal attention: spatial average pooling, a channel-collapsing 1x1x1
// conv, a bottleneck MLP along time, a sigmoid, and a broadcast multiply of
// the resulting per-frame weight over channels and space.
template <typename S>
class TamBlock {
 public:
  TamBlock(std::size_t channels, std::size_t t_len, std::size_t reduction,
           Rng& rng, std::string name)
      : c_(channels), t_(t_len), name_(std::move(name)),
        fc1_(t_len, t_len / reduction, rng, name_ + ".fc1"),
        fc2_(t_len / reduction, t_len, rng, name_ + ".fc2") {
    if (t_len % reduction != 0)
      throw ConfigError(name_ + ": temporal length not divisible by reduction");
    cw_ = Tensor<S>({channels});
    cb_ = Tensor<S>({1});
    cwg_ = cw_;
    cbg_ = cb_;
    const double std_he = std::sqrt(2.0 / static_cast<double>(channels));
    for (S& w : cw_.flat()) w = static_cast<S>(rng.normal(0.0, std_he));
  }

  // returns (F_out, A_t); A_t has shape (N, T')
  std::pair<Tensor<S>, Tensor<S>> forward(const Tensor<S>& x) {
    const auto& sh = x.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], HW = sh[3] * sh[4];
    if (C != c_ || T != t_) throw InputError(name_ + ": feature map shape mismatch");
    input_ = x;

    pooled_ = Tensor<S>({N, C, T});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t) {
          const S* row = x.data() + ((n * C + c) * T + t) * HW;
          S acc = S(0);
          for (std::size_t i = 0; i < HW; ++i) acc += row[i];
          pooled_(n, c, t) = acc / static_cast<S>(HW);
        }

    Tensor<S> z({N, T});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) {
        S acc = cb_(0);
        for (std::size_t c = 0; c < C; ++c) acc += cw_(c) * pooled_(n, c, t);
        z(n, t) = acc;
      }

    Tensor<S> a = fc2_.forward(relu_.forward(fc1_.forward(z)));
    att_ = sig_.forward(a);
    if (attention_hook) attention_hook(att_);

    Tensor<S> y(sh);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t) {
          const S w = att_(n, t);
          const S* xi = x.data() + ((n * C + c) * T + t) * HW;
          S* yo = y.data() + ((n * C + c) * T + t) * HW;
          for (std::size_t i = 0; i < HW; ++i) yo[i] = w * xi[i];
        }
    return {std::move(y), att_};
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const auto& sh = input_.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], HW = sh[3] * sh[4];

    Tensor<S> datt({N, T});
    Tensor<S> dx(sh);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) {
        S acc = S(0);
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t base = ((n * C + c) * T + t) * HW;
          const S* xi = input_.data() + base;
          const S* gi = dy.data() + base;
          S* xo = dx.data() + base;
          const S w = att_(n, t);
          for (std::size_t i = 0; i < HW; ++i) {
            acc += gi[i] * xi[i];
            xo[i] = w * gi[i];
          }
        }
        datt(n, t) = acc;
      }

    Tensor<S> dz = fc1_.backward(relu_.backward(fc2_.backward(sig_.backward(datt))));

    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) {
        const S g = dz(n, t);
        cbg_(0) += g;
        for (std::size_t c = 0; c < C; ++c) cwg_(c) += g * pooled_(n, c, t);
      }

    // dpooled[n,c,t] = cw_[c] * dz[n,t], spread uniformly over the window
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        const S wc = cw_(c);
        for (std::size_t t = 0; t < T; ++t) {
          const S dp = wc * dz(n, t) / static_cast<S>(HW);
          S* xo = dx.data() + ((n * C + c) * T + t) * HW;
          for (std::size_t i = 0; i < HW; ++i) xo[i] += dp;
        }
      }
    return dx;
  }

  void collect(std::vector<ParamRef<S>>& out) {
    out.push_back({name_ + ".cw", &cw_, &cwg_});
    out.push_back({name_ + ".cb", &cb_, &cbg_});
    for (auto& p : fc1_.params()) out.push_back(p);
    for (auto& p : fc2_.params()) out.push_back(p);
  }

  std::size_t param_count() const {
    return cw_.size() + cb_.size() + fc1_.param_count() + fc2_.param_count();
  }

  const Tensor<S>& last_attention() const { return att_; }

  // test hook: runs after the sigmoid and may overwrite the attention map
  std::function<void(Tensor<S>&)> attention_hook;

 private:
  std::size_t c_, t_;
  std::string name_;
  Tensor<S> cw_, cb_, cwg_, cbg_;
  Linear<S> fc1_, fc2_;
  ReLU<S> relu_;
  Sigmoid<S> sig_;
  Tensor<S> input_, pooled_, att_;
};

template <typename S>
std::pair<Tensor<S>, Tensor<S>> tam_forward(TamBlock<S>& tam, const Tensor<S>& x) {
  return tam.forward(x);
}

template <typename S>
struct ConvBlock {
  ConvBlock(std::size_t in_c, std::size_t out_c, std::array<int, 3> k,
            std::array<int, 3> s, std::array<int, 3> p, Rng& rng,
            const std::string& name)
      : conv(in_c, out_c, k, s, p, rng, name), bn(out_c, name + ".bn") {}

  Tensor<S> forward(const Tensor<S>& x, bool train) {
    return relu.forward(bn.forward(conv.forward(x), train));
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    return conv.backward(bn.backward(relu.backward(dy)));
  }

  void collect(std::vector<ParamRef<S>>& out) {
    for (auto& p : conv.params()) out.push_back(p);
    for (auto& p : bn.params()) out.push_back(p);
  }

  void collect_buffers(std::vector<std::pair<std::string, Tensor<S>*>>& out) {
    for (auto& b : bn.buffers()) out.push_back(b);
  }

  std::size_t param_count() const { return conv.param_count() + bn.param_count(); }

  Conv3d<S> conv;
  BatchNorm3d<S> bn;
  ReLU<S> relu;
};

template <typename S>
struct DeconvBlock {
  DeconvBlock(std::size_t in_c, std::size_t out_c, Rng& rng, const std::string& name)
      : deconv(in_c, out_c, 4, 2, 1, rng, name), bn(out_c, name + ".bn") {}

  Tensor<S> forward(const Tensor<S>& x, bool train) {
    return relu.forward(bn.forward(deconv.forward(x), train));
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    return deconv.backward(bn.backward(relu.backward(dy)));
  }

  void collect(std::vector<ParamRef<S>>& out) {
    for (auto& p : deconv.params()) out.push_back(p);
    for (auto& p : bn.params()) out.push_back(p);
  }

  void collect_buffers(std::vector<std::pair<std::string, Tensor<S>*>>& out) {
    for (auto& b : bn.buffers()) out.push_back(b);
  }

  std::size_t param_count() const { return deconv.param_count() + bn.param_count(); }

  ConvTranspose3dTemporal<S> deconv;
  BatchNorm3d<S> bn;
  ReLU<S> relu;
};

}  // namespace nn

// Encoder-decoder over (N, 3, T, H, W) clips: spatial stem, two temporal
// downsamplings to T/4, six deep conv layers, then per decoder stage a
// temporal attention block and a x2 temporal transposed conv, closed by
// spatial pooling and a 1x1x1 head producing one value per frame.
template <typename S>
class Model {
 public:
  explicit Model(const ModelConfig& cfg)
      : cfg_(validated(cfg)), rng_(cfg.seed),
        stem_(cfg.in_channels, cfg.channels[0], {1, 5, 5}, {1, 2, 2}, {0, 2, 2}, rng_, "stem"),
        pool0_({1, 2, 2}),
        enc1_(cfg.channels[0], cfg.channels[1], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc1"),
        pool1_({2, 2, 2}),
        enc2_(cfg.channels[1], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc2"),
        enc3_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc3"),
        pool2_({2, 1, 1}),
        enc4_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc4"),
        enc5_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc5"),
        pool3_({1, 2, 2}),
        enc6_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc6"),
        enc7_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc7"),
        enc8_(cfg.channels[2], cfg.channels[2], {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng_, "enc8"),
        tam1_(cfg.channels[2], cfg.T / 4, cfg.reduction, rng_, "tam1"),
        dec1_(cfg.channels[2], cfg.channels[2], rng_, "dec1"),
        tam2_(cfg.channels[2], cfg.T / 2, cfg.reduction, rng_, "tam2"),
        dec2_(cfg.channels[2], cfg.channels[2], rng_, "dec2"),
        head_(cfg.channels[2], 1, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, rng_, "head") {}

  const ModelConfig& config() const { return cfg_; }

  // x: (N, in_channels, T, H, W) -> (N, T)
  Tensor<S> forward(const Tensor<S>& x, bool train) {
    const auto& sh = x.shape();
    if (sh.size() != 5 || sh[1] != cfg_.in_channels || sh[2] != cfg_.T)
      throw InputError("model: input must be (N, C, T, H, W) matching the config");
    Tensor<S> h = stem_.forward(x, train);
    h = pool0_.forward(h);
    h = enc1_.forward(h, train);
    h = pool1_.forward(h);
    h = enc2_.forward(h, train);
    h = enc3_.forward(h, train);
    h = pool2_.forward(h);
    h = enc4_.forward(h, train);
    h = enc5_.forward(h, train);
    h = pool3_.forward(h);
    h = enc6_.forward(h, train);
    h = enc7_.forward(h, train);
    h = enc8_.forward(h, train);
    h = tam1_.forward(h).first;
    h = dec1_.forward(h, train);
    h = tam2_.forward(h).first;
    h = dec2_.forward(h, train);

    // spatial global average
    const auto& hs = h.shape();
    const std::size_t N = hs[0], C = hs[1], T = hs[2], HW = hs[3] * hs[4];
    pooled_hw_ = hs[3] * hs[4];
    Tensor<S> g({N, C, T, 1, 1});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t) {
          const S* row = h.data() + ((n * C + c) * T + t) * HW;
          S acc = S(0);
          for (std::size_t i = 0; i < HW; ++i) acc += row[i];
          g(n, c, t, 0, 0) = acc / static_cast<S>(HW);
        }
    pre_pool_shape_ = hs;

    Tensor<S> o = head_.forward(g);
    Tensor<S> out({N, T});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) out(n, t) = o(n, 0, t, 0, 0);
    return out;
  }

  // dy: (N, T); returns gradient wrt the input clip
  Tensor<S> backward(const Tensor<S>& dy) {
    const std::size_t N = dy.shape()[0], T = dy.shape()[1];
    Tensor<S> dout({N, 1, T, 1, 1});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) dout(n, 0, t, 0, 0) = dy(n, t);
    Tensor<S> dg = head_.backward(dout);

    const std::size_t C = pre_pool_shape_[1], HW = pooled_hw_;
    Tensor<S> dh(pre_pool_shape_);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t) {
          const S dp = dg(n, c, t, 0, 0) / static_cast<S>(HW);
          S* row = dh.data() + ((n * C + c) * T + t) * HW;
          for (std::size_t i = 0; i < HW; ++i) row[i] = dp;
        }

    Tensor<S> d = dec2_.backward(dh);
    d = tam2_.backward(d);
    d = dec1_.backward(d);
    d = tam1_.backward(d);
    d = enc8_.backward(d);
    d = enc7_.backward(d);
    d = enc6_.backward(d);
    d = pool3_.backward(d);
    d = enc5_.backward(d);
    d = enc4_.backward(d);
    d = pool2_.backward(d);
    d = enc3_.backward(d);
    d = enc2_.backward(d);
    d = pool1_.backward(d);
    d = enc1_.backward(d);
    d = pool0_.backward(d);
    return stem_.backward(d);
  }

  std::vector<nn::ParamRef<S>> params() {
    std::vector<nn::ParamRef<S>> out;
    stem_.collect(out);
    enc1_.collect(out);
    enc2_.collect(out);
    enc3_.collect(out);
    enc4_.collect(out);
    enc5_.collect(out);
    enc6_.collect(out);
    enc7_.collect(out);
    enc8_.collect(out);
    tam1_.collect(out);
    dec1_.collect(out);
    tam2_.collect(out);
    dec2_.collect(out);
    for (auto& p : head_.params()) out.push_back(p);
    return out;
  }

  // normalization running stats, in the same fixed block order as params()
  std::vector<std::pair<std::string, Tensor<S>*>> buffers() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    stem_.collect_buffers(out);
    enc1_.collect_buffers(out);
    enc2_.collect_buffers(out);
    enc3_.collect_buffers(out);
    enc4_.collect_buffers(out);
    enc5_.collect_buffers(out);
    enc6_.collect_buffers(out);
    enc7_.collect_buffers(out);
    enc8_.collect_buffers(out);
    dec1_.collect_buffers(out);
    dec2_.collect_buffers(out);
    return out;
  }

  nn::TamBlock<S>& tam1() { return tam1_; }
  nn::TamBlock<S>& tam2() { return tam2_; }

  std::map<std::string, std::size_t> parameter_breakdown() const {
    std::map<std::string, std::size_t> m;
    m["stem"] = stem_.param_count();
    m["encoder"] = enc1_.param_count() + enc2_.param_count() + enc3_.param_count() +
                   enc4_.param_count() + enc5_.param_count() + enc6_.param_count() +
                   enc7_.param_count() + enc8_.param_count();
    m["tam1"] = tam1_.param_count();
    m["tam2"] = tam2_.param_count();
    m["decoder"] = dec1_.param_count() + dec2_.param_count();
    m["head"] = head_.param_count();
    return m;
  }

 private:
  static const ModelConfig& validated(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  ModelConfig cfg_;
  Rng rng_;
  nn::ConvBlock<S> stem_;
  nn::MaxPool3d<S> pool0_;
  nn::ConvBlock<S> enc1_;
  nn::MaxPool3d<S> pool1_;
  nn::ConvBlock<S> enc2_, enc3_;
  nn::MaxPool3d<S> pool2_;
  nn::ConvBlock<S> enc4_, enc5_;
  nn::MaxPool3d<S> pool3_;
  nn::ConvBlock<S> enc6_, enc7_, enc8_;
  nn::TamBlock<S> tam1_;
  nn::DeconvBlock<S> dec1_;
  nn::TamBlock<S> tam2_;
  nn::DeconvBlock<S> dec2_;
  nn::Conv3d<S> head_;
  std::vector<std::size_t> pre_pool_shape_;
  std::size_t pooled_hw_ = 0;
};

template <typename S = float>
Model<S> build_model(const ModelConfig& cfg) {
  cfg.validate();
  return Model<S>(cfg);
}

struct ParamCount {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_submodule;
};

template <typename S>
ParamCount count_parameters(const Model<S>& model) {
  ParamCount pc;
  pc.per_submodule = model.parameter_breakdown();
  for (const auto& [k, v] : pc.per_submodule) pc.total += v;
  return pc;
}

// analytic flop estimate (2 flops per multiply-add) for one forward pass
inline double flop_estimate(const ModelConfig& cfg, std::size_t batch) {
  cfg.validate();
  const double N = static_cast<double>(batch);
  const double C0 = static_cast<double>(cfg.channels[0]);
  const double C1 = static_cast<double>(cfg.channels[1]);
  const double C2 = static_cast<double>(cfg.channels[2]);
  const double T = static_cast<double>(cfg.T);
  double H = static_cast<double>(cfg.resolution);

  double flops = 0.0;
  auto conv = [&](double cin, double cout, double k, double t, double hw) {
    flops += 2.0 * N * cout * cin * k * t * hw;
  };
  H = std::floor((H + 4.0 - 5.0) / 2.0) + 1.0;   // stem stride 2, pad 2
  conv(3.0, C0, 25.0, T, H * H);
  H = std::floor(H / 2.0);                        // pool0
  conv(C0, C1, 27.0, T, H * H);                   // enc1
  H = std::floor(H / 2.0);                        // pool1 (with T/2)
  conv(C1, C2, 27.0, T / 2.0, H * H);             // enc2
  conv(C2, C2, 27.0, T / 2.0, H * H);             // enc3
  conv(C2, C2, 27.0, T / 4.0, H * H);             // enc4 (after pool2)
  conv(C2, C2, 27.0, T / 4.0, H * H);             // enc5
  H = std::floor(H / 2.0);                        // pool3
  conv(C2, C2, 27.0, T / 4.0, H * H);             // enc6
  conv(C2, C2, 27.0, T / 4.0, H * H);             // enc7
  conv(C2, C2, 27.0, T / 4.0, H * H);             // enc8
  flops += 2.0 * N * C2 * C2 * 4.0 * (T / 4.0) * H * H;  // dec1
  flops += 2.0 * N * C2 * C2 * 4.0 * (T / 2.0) * H * H;  // dec2
  // TAMs: pooling + channel conv + MLP
  for (double tp : {T / 4.0, T / 2.0}) {
    flops += N * C2 * tp * H * H;
    flops += 2.0 * N * C2 * tp;
    flops += 2.0 * N * (tp * (tp / static_cast<double>(cfg.reduction)) * 2.0);
  }
  flops += 2.0 * N * C2 * T;  // head
  return flops;
}

// ---------------------------------------------------------------------------
// Clip plumbing and checkpoints
// ---------------------------------------------------------------------------

// (T, H, W, 3) clip -> (1, 3, T, H, W) model input
inline Tensor<float> clip_to_input(const NormalizedClip& clip) {
  const auto& sh = clip.diff.shape();
  const std::size_t T = sh[0], H = sh[1], W = sh[2];
  Tensor<float> x({1, 3, T, H, W});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t c = 0; c < 3; ++c)
          x(0, c, t, h, w) = clip.diff(t, h, w, c);
  return x;
}

template <typename S>
std::vector<double> forward(Model<S>& model, const NormalizedClip& clip) {
  const auto& sh = clip.diff.shape();
  if (sh[0] != model.config().T || sh[1] != model.config().resolution ||
      sh[2] != model.config().resolution)
    throw InputError("model forward: clip does not match the model config");
  Tensor<float> xf = clip_to_input(clip);
  Tensor<S> x(xf.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    x.flat()[i] = static_cast<S>(xf.flat()[i]);
  Tensor<S> y = model.forward(x, false);
  std::vector<double> out(model.config().T);
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] = static_cast<double>(y(0, t));
  return out;
}

// version 2 added the normalization running stats; a weights-only file would
// load into a model that normalizes with freshly initialised statistics
constexpr std::uint32_t kCheckpointVersion = 2;

namespace model_detail {

template <typename S>
std::vector<std::pair<std::string, Tensor<S>*>> state_slots(Model<S>& model) {
  std::vector<std::pair<std::string, Tensor<S>*>> slots;
  for (auto& r : model.params()) slots.emplace_back(r.name, r.value);
  for (auto& b : model.buffers()) slots.push_back(b);
  return slots;
}

}  // namespace model_detail

template <typename S>
void save_checkpoint(const std::filesystem::path& path, Model<S>& model) {
  const auto slots = model_detail::state_slots(model);
  json header;
  header["magic"] = "EDCK";
  header["version"] = kCheckpointVersion;
  header["scalar_bytes"] = sizeof(S);
  header["config"] = model.config();
  json tensors = json::array();
  for (const auto& [name, value] : slots) {
    json t;
    t["name"] = name;
    t["shape"] = value->shape();
    tensors.push_back(t);
  }
  header["tensors"] = tensors;
  const std::string htxt = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write checkpoint: " + path.string());
  f.write("EDCK", 4);
  const std::uint32_t hlen = static_cast<std::uint32_t>(htxt.size());
  f.write(reinterpret_cast<const char*>(&hlen), 4);
  f.write(htxt.data(), static_cast<std::streamsize>(htxt.size()));
  for (const auto& [name, value] : slots)
    f.write(reinterpret_cast<const char*>(value->data()),
            static_cast<std::streamsize>(value->size() * sizeof(S)));
  if (!f) throw LoadError("short write on checkpoint: " + path.string());
}

template <typename S = float>
Model<S> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open checkpoint: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "EDCK")
    throw IntegrityError("checkpoint magic mismatch: " + path.string());
  std::uint32_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htxt(hlen, '\0');
  f.read(htxt.data(), hlen);
  if (!f) throw IntegrityError("truncated checkpoint header: " + path.string());
  json header = json::parse(htxt, nullptr, false);
  if (header.is_discarded())
    throw IntegrityError("corrupt checkpoint header: " + path.string());
  if (header.at("version").get<std::uint32_t>() != kCheckpointVersion)
    throw IntegrityError("unsupported checkpoint version in " + path.string());
  if (header.at("scalar_bytes").get<std::size_t>() != sizeof(S))
    throw IntegrityError("checkpoint scalar width mismatch: " + path.string());

  ModelConfig cfg = header.at("config").get<ModelConfig>();
  Model<S> model(cfg);
  const auto slots = model_detail::state_slots(model);
  const json& tensors = header.at("tensors");
  if (tensors.size() != slots.size())
    throw IntegrityError("checkpoint tensor count mismatch: " + path.string());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto name = tensors[i].at("name").get<std::string>();
    const auto shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
    if (name != slots[i].first || shape != slots[i].second->shape())
      throw IntegrityError("checkpoint tensor mismatch at " + name);
    f.read(reinterpret_cast<char*>(slots[i].second->data()),
           static_cast<std::streamsize>(slots[i].second->size() * sizeof(S)));
  }
  if (!f) throw IntegrityError("truncated checkpoint data: " + path.string());
  return model;
}

}  // namespace edacam
