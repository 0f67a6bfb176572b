#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <edacam/errors.hpp>
#include <edacam/rng.hpp>
#include <edacam/tensor.hpp>

namespace edacam {
namespace nn {

// Layers work on (N, C, T, H, W) tensors. Each layer caches what its own
// backward pass needs; backward must follow the matching forward.

template <typename S>
struct ParamRef {
  std::string name;
  Tensor<S>* value;
  Tensor<S>* grad;
};

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using ColMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <typename S>
using MapRow = Eigen::Map<RowMat<S>>;
template <typename S>
using CMapRow = Eigen::Map<const RowMat<S>>;

inline std::size_t conv_out_dim(std::size_t in, int k, int stride, int pad) {
  const long long num = static_cast<long long>(in) + 2LL * pad - k;
  if (num < 0) throw ConfigError("conv_out_dim: kernel larger than padded input");
  return static_cast<std::size_t>(num / stride + 1);
}

template <typename S>
class Conv3d {
 public:
  Conv3d(std::size_t in_c, std::size_t out_c, std::array<int, 3> kernel,
         std::array<int, 3> stride, std::array<int, 3> pad, Rng& rng,
         std::string name = "conv")
      : in_c_(in_c), out_c_(out_c), k_(kernel), s_(stride), p_(pad),
        name_(std::move(name)) {
    weight = Tensor<S>({out_c, in_c, static_cast<std::size_t>(k_[0]),
                        static_cast<std::size_t>(k_[1]), static_cast<std::size_t>(k_[2])});
    bias = Tensor<S>({out_c});
    wgrad = weight;
    bgrad = bias;
    const double fan_in = static_cast<double>(in_c) * k_[0] * k_[1] * k_[2];
    const double std_he = std::sqrt(2.0 / fan_in);
    for (S& w : weight.flat()) w = static_cast<S>(rng.normal(0.0, std_he));
    for (S& b : bias.flat()) b = S(0);
  }

  Tensor<S> forward(const Tensor<S>& x) {
    input_ = x;
    const auto& sh = x.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], H = sh[3], W = sh[4];
    if (C != in_c_) throw ConfigError(name_ + ": channel mismatch");
    const std::size_t To = conv_out_dim(T, k_[0], s_[0], p_[0]);
    const std::size_t Ho = conv_out_dim(H, k_[1], s_[1], p_[1]);
    const std::size_t Wo = conv_out_dim(W, k_[2], s_[2], p_[2]);
    const std::size_t R = in_c_ * k_[0] * k_[1] * k_[2];
    const std::size_t P = To * Ho * Wo;
    Tensor<S> y({N, out_c_, To, Ho, Wo});
    ColMat<S> col(R, P);
    CMapRow<S> wmat(weight.data(), static_cast<Eigen::Index>(out_c_),
                    static_cast<Eigen::Index>(R));
    for (std::size_t n = 0; n < N; ++n) {
      im2col(x.data() + n * C * T * H * W, T, H, W, To, Ho, Wo, col);
      MapRow<S> ymat(y.data() + n * out_c_ * P, static_cast<Eigen::Index>(out_c_),
                     static_cast<Eigen::Index>(P));
      ymat.noalias() = wmat * col;
      for (std::size_t c = 0; c < out_c_; ++c)
        ymat.row(static_cast<Eigen::Index>(c)).array() += bias(c);
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const auto& sh = input_.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], H = sh[3], W = sh[4];
    const auto& osh = dy.shape();
    const std::size_t To = osh[2], Ho = osh[3], Wo = osh[4];
    const std::size_t R = in_c_ * k_[0] * k_[1] * k_[2];
    const std::size_t P = To * Ho * Wo;
    Tensor<S> dx(sh);
    dx.fill(S(0));
    ColMat<S> col(R, P);
    ColMat<S> dcol(R, P);
    CMapRow<S> wmat(weight.data(), static_cast<Eigen::Index>(out_c_),
                    static_cast<Eigen::Index>(R));
    MapRow<S> wg(wgrad.data(), static_cast<Eigen::Index>(out_c_),
                 static_cast<Eigen::Index>(R));
    for (std::size_t n = 0; n < N; ++n) {
      im2col(input_.data() + n * C * T * H * W, T, H, W, To, Ho, Wo, col);
      CMapRow<S> dymat(dy.data() + n * out_c_ * P, static_cast<Eigen::Index>(out_c_),
                       static_cast<Eigen::Index>(P));
      wg.noalias() += dymat * col.transpose();
      for (std::size_t c = 0; c < out_c_; ++c)
        bgrad(c) += dymat.row(static_cast<Eigen::Index>(c)).sum();
      dcol.noalias() = wmat.transpose() * dymat;
      col2im(dcol, T, H, W, To, Ho, Wo, dx.data() + n * C * T * H * W);
    }
    return dx;
  }

  std::vector<ParamRef<S>> params() {
    return {{name_ + ".weight", &weight, &wgrad}, {name_ + ".bias", &bias, &bgrad}};
  }

  std::size_t param_count() const { return weight.size() + bias.size(); }

  Tensor<S> weight, bias, wgrad, bgrad;

 private:
  void im2col(const S* x, std::size_t T, std::size_t H, std::size_t W,
              std::size_t To, std::size_t Ho, std::size_t Wo, ColMat<S>& col) const {
    const std::size_t HW = H * W;
    std::size_t pcol = 0;
    for (std::size_t to = 0; to < To; ++to)
      for (std::size_t ho = 0; ho < Ho; ++ho)
        for (std::size_t wo = 0; wo < Wo; ++wo, ++pcol) {
          S* out = col.data() + pcol * col.rows();
          std::size_t r = 0;
          const long long t0 = static_cast<long long>(to) * s_[0] - p_[0];
          const long long h0 = static_cast<long long>(ho) * s_[1] - p_[1];
          const long long w0 = static_cast<long long>(wo) * s_[2] - p_[2];
          for (std::size_t c = 0; c < in_c_; ++c) {
            const S* xc = x + c * T * HW;
            for (int kt = 0; kt < k_[0]; ++kt) {
              const long long t = t0 + kt;
              for (int kh = 0; kh < k_[1]; ++kh) {
                const long long h = h0 + kh;
                const bool ok_th = t >= 0 && t < static_cast<long long>(T) &&
                                   h >= 0 && h < static_cast<long long>(H);
                for (int kw = 0; kw < k_[2]; ++kw, ++r) {
                  const long long w = w0 + kw;
                  out[r] = (ok_th && w >= 0 && w < static_cast<long long>(W))
                               ? xc[static_cast<std::size_t>(t) * HW +
                                    static_cast<std::size_t>(h) * W +
                                    static_cast<std::size_t>(w)]
                               : S(0);
                }
              }
            }
          }
        }
  }

  void col2im(const ColMat<S>& dcol, std::size_t T, std::size_t H, std::size_t W,
              std::size_t To, std::size_t Ho, std::size_t Wo, S* dx) const {
    const std::size_t HW = H * W;
    std::size_t pcol = 0;
    for (std::size_t to = 0; to < To; ++to)
      for (std::size_t ho = 0; ho < Ho; ++ho)
        for (std::size_t wo = 0; wo < Wo; ++wo, ++pcol) {
          const S* in = dcol.data() + pcol * dcol.rows();
          std::size_t r = 0;
          const long long t0 = static_cast<long long>(to) * s_[0] - p_[0];
          const long long h0 = static_cast<long long>(ho) * s_[1] - p_[1];
          const long long w0 = static_cast<long long>(wo) * s_[2] - p_[2];
          for (std::size_t c = 0; c < in_c_; ++c) {
            S* xc = dx + c * T * HW;
            for (int kt = 0; kt < k_[0]; ++kt) {
              const long long t = t0 + kt;
              for (int kh = 0; kh < k_[1]; ++kh) {
                const long long h = h0 + kh;
                const bool ok_th = t >= 0 && t < static_cast<long long>(T) &&
                                   h >= 0 && h < static_cast<long long>(H);
                for (int kw = 0; kw < k_[2]; ++kw, ++r) {
                  const long long w = w0 + kw;
                  if (ok_th && w >= 0 && w < static_cast<long long>(W))
                    xc[static_cast<std::size_t>(t) * HW +
                       static_cast<std::size_t>(h) * W +
                       static_cast<std::size_t>(w)] += in[r];
                }
              }
            }
          }
        }
  }

  std::size_t in_c_, out_c_;
  std::array<int, 3> k_, s_, p_;
  std::string name_;
  Tensor<S> input_;
};

// transposed conv along the temporal axis only: kernel (kt,1,1)
template <typename S>
class ConvTranspose3dTemporal {
 public:
  ConvTranspose3dTemporal(std::size_t in_c, std::size_t out_c, int kt, int stride,
                          int pad, Rng& rng, std::string name = "deconv")
      : in_c_(in_c), out_c_(out_c), kt_(kt), s_(stride), p_(pad),
        name_(std::move(name)) {
    weight = Tensor<S>({in_c, out_c, static_cast<std::size_t>(kt)});
    bias = Tensor<S>({out_c});
    wgrad = weight;
    bgrad = bias;
    const double fan_in = static_cast<double>(in_c) * kt;
    const double std_he = std::sqrt(2.0 / fan_in);
    for (S& w : weight.flat()) w = static_cast<S>(rng.normal(0.0, std_he));
    for (S& b : bias.flat()) b = S(0);
  }

  std::size_t out_t(std::size_t T) const {
    return (T - 1) * s_ - 2 * p_ + kt_;
  }

  Tensor<S> forward(const Tensor<S>& x) {
    input_ = x;
    const auto& sh = x.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], H = sh[3], W = sh[4];
    if (C != in_c_) throw ConfigError(name_ + ": channel mismatch");
    const std::size_t To = out_t(T);
    const std::size_t HW = H * W;
    Tensor<S> y({N, out_c_, To, H, W});
    for (std::size_t n = 0; n < N; ++n) {
      S* yn = y.data() + n * out_c_ * To * HW;
      for (std::size_t co = 0; co < out_c_; ++co) {
        S* yc = yn + co * To * HW;
        const S b = bias(co);
        for (std::size_t i = 0; i < To * HW; ++i) yc[i] = b;
      }
      const S* xn = x.data() + n * C * T * HW;
      for (std::size_t ci = 0; ci < in_c_; ++ci)
        for (std::size_t co = 0; co < out_c_; ++co)
          for (int k = 0; k < kt_; ++k) {
            const S wv = weight(ci, co, static_cast<std::size_t>(k));
            if (wv == S(0)) continue;
            for (std::size_t t = 0; t < T; ++t) {
              const long long to = static_cast<long long>(t) * s_ - p_ + k;
              if (to < 0 || to >= static_cast<long long>(To)) continue;
              const S* xrow = xn + (ci * T + t) * HW;
              S* yrow = yn + (co * To + static_cast<std::size_t>(to)) * HW;
              for (std::size_t i = 0; i < HW; ++i) yrow[i] += wv * xrow[i];
            }
          }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const auto& sh = input_.shape();
    const std::size_t N = sh[0], T = sh[2], H = sh[3], W = sh[4];
    const std::size_t To = dy.shape()[2];
    const std::size_t HW = H * W;
    Tensor<S> dx(sh);
    dx.fill(S(0));
    for (std::size_t n = 0; n < N; ++n) {
      const S* dyn = dy.data() + n * out_c_ * To * HW;
      const S* xn = input_.data() + n * in_c_ * T * HW;
      S* dxn = dx.data() + n * in_c_ * T * HW;
      for (std::size_t co = 0; co < out_c_; ++co) {
        const S* dyc = dyn + co * To * HW;
        S acc = S(0);
        for (std::size_t i = 0; i < To * HW; ++i) acc += dyc[i];
        bgrad(co) += acc;
      }
      for (std::size_t ci = 0; ci < in_c_; ++ci)
        for (std::size_t co = 0; co < out_c_; ++co)
          for (int k = 0; k < kt_; ++k) {
            const S wv = weight(ci, co, static_cast<std::size_t>(k));
            S wg = S(0);
            for (std::size_t t = 0; t < T; ++t) {
              const long long to = static_cast<long long>(t) * s_ - p_ + k;
              if (to < 0 || to >= static_cast<long long>(To)) continue;
              const S* xrow = xn + (ci * T + t) * HW;
              const S* dyrow = dyn + (co * To + static_cast<std::size_t>(to)) * HW;
              S* dxrow = dxn + (ci * T + t) * HW;
              for (std::size_t i = 0; i < HW; ++i) {
                wg += xrow[i] * dyrow[i];
                dxrow[i] += wv * dyrow[i];
              }
            }
            wgrad(ci, co, static_cast<std::size_t>(k)) += wg;
          }
    }
    return dx;
  }

  std::vector<ParamRef<S>> params() {
    return {{name_ + ".weight", &weight, &wgrad}, {name_ + ".bias", &bias, &bgrad}};
  }

  std::size_t param_count() const { return weight.size() + bias.size(); }

  Tensor<S> weight, bias, wgrad, bgrad;

 private:
  std::size_t in_c_, out_c_;
  int kt_, s_, p_;
  std::string name_;
  Tensor<S> input_;
};

template <typename S>
class BatchNorm3d {
 public:
  explicit BatchNorm3d(std::size_t channels, std::string name = "bn")
      : c_(channels), name_(std::move(name)) {
    gamma = Tensor<S>({channels});
    beta = Tensor<S>({channels});
    ggrad = gamma;
    bgrad = beta;
    running_mean = Tensor<S>({channels});
    running_var = Tensor<S>({channels});
    gamma.fill(S(1));
    beta.fill(S(0));
    running_mean.fill(S(0));
    running_var.fill(S(1));
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) {
    const auto& sh = x.shape();
    const std::size_t N = sh[0], C = sh[1], M = sh[2] * sh[3] * sh[4];
    if (C != c_) throw ConfigError(name_ + ": channel mismatch");
    Tensor<S> y(sh);
    xhat_ = Tensor<S>(sh);
    inv_std_.assign(c_, S(0));
    const std::size_t count = N * M;
    for (std::size_t c = 0; c < c_; ++c) {
      S mean, var;
      if (train) {
        S sum = S(0);
        for (std::size_t n = 0; n < N; ++n) {
          const S* xc = x.data() + (n * C + c) * M;
          for (std::size_t i = 0; i < M; ++i) sum += xc[i];
        }
        mean = sum / static_cast<S>(count);
        S sq = S(0);
        for (std::size_t n = 0; n < N; ++n) {
          const S* xc = x.data() + (n * C + c) * M;
          for (std::size_t i = 0; i < M; ++i) {
            const S d = xc[i] - mean;
            sq += d * d;
          }
        }
        var = sq / static_cast<S>(count);
        const S unbiased = count > 1 ? sq / static_cast<S>(count - 1) : var;
        running_mean(c) = static_cast<S>((1.0 - momentum) * running_mean(c) +
                                         momentum * mean);
        running_var(c) = static_cast<S>((1.0 - momentum) * running_var(c) +
                                        momentum * unbiased);
      } else {
        mean = running_mean(c);
        var = running_var(c);
      }
      const S istd = S(1) / std::sqrt(var + static_cast<S>(eps));
      inv_std_[c] = istd;
      const S g = gamma(c), b = beta(c);
      for (std::size_t n = 0; n < N; ++n) {
        const S* xc = x.data() + (n * C + c) * M;
        S* hc = xhat_.data() + (n * C + c) * M;
        S* yc = y.data() + (n * C + c) * M;
        for (std::size_t i = 0; i < M; ++i) {
          hc[i] = (xc[i] - mean) * istd;
          yc[i] = g * hc[i] + b;
        }
      }
    }
    train_ = train;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const auto& sh = xhat_.shape();
    const std::size_t N = sh[0], C = sh[1], M = sh[2] * sh[3] * sh[4];
    Tensor<S> dx(sh);
    const S count = static_cast<S>(N * M);
    for (std::size_t c = 0; c < c_; ++c) {
      S sum_dy = S(0), sum_dy_xhat = S(0);
      for (std::size_t n = 0; n < N; ++n) {
        const S* dc = dy.data() + (n * C + c) * M;
        const S* hc = xhat_.data() + (n * C + c) * M;
        for (std::size_t i = 0; i < M; ++i) {
          sum_dy += dc[i];
          sum_dy_xhat += dc[i] * hc[i];
        }
      }
      ggrad(c) += sum_dy_xhat;
      bgrad(c) += sum_dy;
      const S g = gamma(c), istd = inv_std_[c];
      for (std::size_t n = 0; n < N; ++n) {
        const S* dc = dy.data() + (n * C + c) * M;
        const S* hc = xhat_.data() + (n * C + c) * M;
        S* xc = dx.data() + (n * C + c) * M;
        if (train_) {
          for (std::size_t i = 0; i < M; ++i)
            xc[i] = g * istd / count * (count * dc[i] - sum_dy - hc[i] * sum_dy_xhat);
        } else {
          for (std::size_t i = 0; i < M; ++i) xc[i] = g * istd * dc[i];
        }
      }
    }
    return dx;
  }

  std::vector<ParamRef<S>> params() {
    return {{name_ + ".gamma", &gamma, &ggrad}, {name_ + ".beta", &beta, &bgrad}};
  }

  // running statistics; not trainable but part of the model state
  std::vector<std::pair<std::string, Tensor<S>*>> buffers() {
    return {{name_ + ".running_mean", &running_mean},
            {name_ + ".running_var", &running_var}};
  }

  std::size_t param_count() const { return gamma.size() + beta.size(); }

  void zero_grad() {
    ggrad.fill(S(0));
    bgrad.fill(S(0));
  }

  static constexpr double momentum = 0.1;
  static constexpr double eps = 1e-5;
  Tensor<S> gamma, beta, ggrad, bgrad, running_mean, running_var;

 private:
  std::size_t c_;
  std::string name_;
  Tensor<S> xhat_;
  std::vector<S> inv_std_;
  bool train_ = true;
};

template <typename S>
class MaxPool3d {
 public:
  explicit MaxPool3d(std::array<int, 3> kernel) : k_(kernel) {}

  // floor semantics: trailing samples that do not fill a window are dropped
  Tensor<S> forward(const Tensor<S>& x) {
    const auto& sh = x.shape();
    const std::size_t N = sh[0], C = sh[1], T = sh[2], H = sh[3], W = sh[4];
    const std::size_t To = T / k_[0], Ho = H / k_[1], Wo = W / k_[2];
    if (To == 0 || Ho == 0 || Wo == 0)
      throw ConfigError("maxpool: kernel larger than input");
    in_shape_ = sh;
    Tensor<S> y({N, C, To, Ho, Wo});
    argmax_.assign(y.size(), 0);
    const std::size_t HW = H * W;
    std::size_t o = 0;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        const S* xc = x.data() + (n * C + c) * T * HW;
        for (std::size_t to = 0; to < To; ++to)
          for (std::size_t ho = 0; ho < Ho; ++ho)
            for (std::size_t wo = 0; wo < Wo; ++wo, ++o) {
              S best = -std::numeric_limits<S>::infinity();
              std::size_t besti = 0;
              for (int dt = 0; dt < k_[0]; ++dt)
                for (int dh = 0; dh < k_[1]; ++dh)
                  for (int dw = 0; dw < k_[2]; ++dw) {
                    const std::size_t idx =
                        (to * k_[0] + dt) * HW + (ho * k_[1] + dh) * W + wo * k_[2] + dw;
                    if (xc[idx] > best) {
                      best = xc[idx];
                      besti = idx;
                    }
                  }
              y.flat()[o] = best;
              argmax_[o] = (n * C + c) * T * HW + besti;
            }
      }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx(in_shape_);
    dx.fill(S(0));
    for (std::size_t o = 0; o < dy.size(); ++o) dx.flat()[argmax_[o]] += dy.flat()[o];
    return dx;
  }

 private:
  std::array<int, 3> k_;
  std::vector<std::size_t> argmax_;
  std::vector<std::size_t> in_shape_;
};

template <typename S>
class ReLU {
 public:
  Tensor<S> forward(const Tensor<S>& x) {
    out_ = x;
    for (S& v : out_.flat()) v = v > S(0) ? v : S(0);
    return out_;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (out_.flat()[i] <= S(0)) dx.flat()[i] = S(0);
    return dx;
  }

 private:
  Tensor<S> out_;
};

template <typename S>
class Sigmoid {
 public:
  Tensor<S> forward(const Tensor<S>& x) {
    out_ = x;
    for (S& v : out_.flat()) v = S(1) / (S(1) + std::exp(-v));
    return out_;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const S y = out_.flat()[i];
      dx.flat()[i] *= y * (S(1) - y);
    }
    return dx;
  }

 private:
  Tensor<S> out_;
};

// fully connected over the last axis of a (N, F) tensor
template <typename S>
class Linear {
 public:
  Linear(std::size_t in_f, std::size_t out_f, Rng& rng, std::string name = "linear")
      : in_f_(in_f), out_f_(out_f), name_(std::move(name)) {
    weight = Tensor<S>({out_f, in_f});
    bias = Tensor<S>({out_f});
    wgrad = weight;
    bgrad = bias;
    const double std_he = std::sqrt(2.0 / static_cast<double>(in_f));
    for (S& w : weight.flat()) w = static_cast<S>(rng.normal(0.0, std_he));
    for (S& b : bias.flat()) b = S(0);
  }

  Tensor<S> forward(const Tensor<S>& x) {
    input_ = x;
    const std::size_t N = x.shape()[0];
    if (x.shape()[1] != in_f_) throw ConfigError(name_ + ": feature mismatch");
    Tensor<S> y({N, out_f_});
    CMapRow<S> xm(x.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(in_f_));
    CMapRow<S> wm(weight.data(), static_cast<Eigen::Index>(out_f_),
                  static_cast<Eigen::Index>(in_f_));
    MapRow<S> ym(y.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(out_f_));
    ym.noalias() = xm * wm.transpose();
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t f = 0; f < out_f_; ++f) y(n, f) += bias(f);
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const std::size_t N = input_.shape()[0];
    Tensor<S> dx({N, in_f_});
    CMapRow<S> xm(input_.data(), static_cast<Eigen::Index>(N),
                  static_cast<Eigen::Index>(in_f_));
    CMapRow<S> wm(weight.data(), static_cast<Eigen::Index>(out_f_),
                  static_cast<Eigen::Index>(in_f_));
    CMapRow<S> dym(dy.data(), static_cast<Eigen::Index>(N),
                   static_cast<Eigen::Index>(out_f_));
    MapRow<S> dxm(dx.data(), static_cast<Eigen::Index>(N),
                  static_cast<Eigen::Index>(in_f_));
    MapRow<S> wg(wgrad.data(), static_cast<Eigen::Index>(out_f_),
                 static_cast<Eigen::Index>(in_f_));
    wg.noalias() += dym.transpose() * xm;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t f = 0; f < out_f_; ++f) bgrad(f) += dy(n, f);
    dxm.noalias() = dym * wm;
    return dx;
  }

  std::vector<ParamRef<S>> params() {
    return {{name_ + ".weight", &weight, &wgrad}, {name_ + ".bias", &bias, &bgrad}};
  }

  std::size_t param_count() const { return weight.size() + bias.size(); }

  Tensor<S> weight, bias, wgrad, bgrad;

 private:
  std::size_t in_f_, out_f_;
  std::string name_;
  Tensor<S> input_;
};

template <typename S>
struct MseLoss {
  S value = S(0);

  // mean over all elements of (pred - target)^2
  S forward(const Tensor<S>& pred, const Tensor<S>& target) {
    if (!pred.same_shape(target)) throw InputError("mse: shape mismatch");
    S acc = S(0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const S d = pred.flat()[i] - target.flat()[i];
      acc += d * d;
    }
    value = acc / static_cast<S>(pred.size());
    pred_ = pred;
    target_ = target;
    return value;
  }

  Tensor<S> backward() const {
    Tensor<S> g(pred_.shape());
    const S scale = S(2) / static_cast<S>(pred_.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      g.flat()[i] = scale * (pred_.flat()[i] - target_.flat()[i]);
    return g;
  }

 private:
  Tensor<S> pred_, target_;
};

template <typename S>
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void attach(const std::vector<ParamRef<S>>& refs) {
    for (const auto& r : refs) {
      Slot s;
      s.ref = r;
      s.m.assign(r.value->size(), S(0));
      s.v.assign(r.value->size(), S(0));
      slots_.push_back(std::move(s));
    }
  }

  void zero_grad() {
    for (auto& s : slots_) s.ref.grad->fill(S(0));
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (auto& s : slots_) {
      S* w = s.ref.value->data();
      const S* g = s.ref.grad->data();
      for (std::size_t i = 0; i < s.m.size(); ++i) {
        s.m[i] = static_cast<S>(b1_ * s.m[i] + (1.0 - b1_) * g[i]);
        s.v[i] = static_cast<S>(b2_ * s.v[i] + (1.0 - b2_) * g[i] * g[i]);
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        w[i] -= static_cast<S>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  long steps() const { return t_; }

 private:
  struct Slot {
    ParamRef<S> ref;
    std::vector<S> m, v;
  };
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace nn
}  // namespace edacam
