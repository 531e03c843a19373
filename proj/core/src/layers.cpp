// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"

namespace clo {

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "none") return Activation::kIdentity;
  if (name == "gelu") return Activation::kGelu;
  if (name == "swish") return Activation::kSwish;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "silu") return Activation::kSilu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation kind) {
  switch (kind) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kGelu:
      return "gelu";
    case Activation::kSwish:
      return "swish";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kSilu:
      return "silu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, std::size_t stride) {
  if (stride == 0) throw ArgumentError("avg_pool2d: stride must be >= 1");
  const auto& s = x.shape();
  if (stride == 1) return x;
  if (s.h() % stride != 0 || s.w() % stride != 0) {
    throw DimensionError("avg_pool2d: stride " + std::to_string(stride) +
                         " does not divide spatial extent " + std::to_string(s.h()) + "x" +
                         std::to_string(s.w()));
  }
  const std::size_t ho = s.h() / stride;
  const std::size_t wo = s.w() / stride;
  const std::size_t planes = s.n() * s.c();
  const T inv = T(1) / static_cast<T>(stride * stride);
  Buffer<T> out(planes * ho * wo, T(0));
  auto src = x.data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* in = src.data() + p * s.plane();
    T* dst = out.data() + p * ho * wo;
    for (std::size_t y = 0; y < s.h(); ++y)
      for (std::size_t xx = 0; xx < s.w(); ++xx) dst[(y / stride) * wo + xx / stride] += in[y * s.w() + xx];
    for (std::size_t i = 0; i < ho * wo; ++i) dst[i] *= inv;
  }
  return BasicTensor<T>::from_op(
      "avg_pool2d", Shape::nchw(s.n(), s.c(), ho, wo), std::move(out), {x},
      [=, h = s.h(), w = s.w()](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        for (std::size_t p = 0; p < planes; ++p) {
          const T* go = g.grad_out.data() + p * ho * wo;
          T* dst = gx.data() + p * h * w;
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx)
              dst[y * w + xx] += go[(y / stride) * wo + xx / stride] * inv;
        }
      });
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  const auto& s = x.shape();
  const std::size_t planes = s.n() * s.c();
  const std::size_t plane = s.plane();
  const T inv = T(1) / static_cast<T>(plane);
  Buffer<T> out(planes);
  auto src = x.data();
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += src[p * plane + i];
    out[p] = acc * inv;
  }
  return BasicTensor<T>::from_op("global_avg_pool", Shape::nchw(s.n(), s.c(), 1, 1),
                                 std::move(out), {x},
                                 [=](const detail::BackwardArgs<T>& g) {
                                   auto gx = g.input_grads[0];
                                   for (std::size_t p = 0; p < planes; ++p)
                                     for (std::size_t i = 0; i < plane; ++i)
                                       gx[p * plane + i] += g.grad_out[p] * inv;
                                 });
}

template <typename T>
BasicTensor<T> softmax_tokens(const BasicTensor<T>& scores) {
  const auto& s = scores.shape();
  const std::size_t row = s.w();
  const std::size_t rows = s.numel() / row;
  auto src = scores.data();
  Buffer<T> out(src.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = src.data() + r * row;
    T* dst = out.data() + r * row;
    T peak = in[0];
    for (std::size_t i = 0; i < row; ++i) {
      if (std::isnan(in[i])) throw NumericError("softmax_tokens: NaN score");
      peak = std::max(peak, in[i]);
    }
    T total = 0;
    for (std::size_t i = 0; i < row; ++i) total += dst[i] = std::exp(in[i] - peak);
    for (std::size_t i = 0; i < row; ++i) dst[i] /= total;
  }
  return BasicTensor<T>::from_op("softmax_tokens", s, std::move(out), {scores},
                                 [row, rows](const detail::BackwardArgs<T>& g) {
                                   auto gx = g.input_grads[0];
                                   for (std::size_t r = 0; r < rows; ++r) {
                                     const T* y = g.out.data() + r * row;
                                     const T* gy = g.grad_out.data() + r * row;
                                     T dot = 0;
                                     for (std::size_t i = 0; i < row; ++i) dot += gy[i] * y[i];
                                     for (std::size_t i = 0; i < row; ++i)
                                       gx[r * row + i] += y[i] * (gy[i] - dot);
                                   }
                                 });
}

namespace {

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace

template <typename T>
BasicTensor<T> activation(Activation kind, const BasicTensor<T>& x, T beta) {
  if (kind == Activation::kIdentity) return x;
  if (kind == Activation::kSilu) beta = T(1);
  auto src = x.data();
  Buffer<T> out(src.size());
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  const T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  const T below_one = std::nextafter(T(1), T(0));
  for (std::size_t i = 0; i < src.size(); ++i) {
    const T v = src[i];
    switch (kind) {
      case Activation::kGelu:
        out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
        break;
      case Activation::kSwish:
      case Activation::kSilu:
        out[i] = v * sigmoid(beta * v);
        break;
      case Activation::kTanh:
        // kept strictly inside (-1, 1) where tanh would round to +-1
        out[i] = std::clamp(std::tanh(v), -below_one, below_one);
        break;
      case Activation::kRelu:
        out[i] = v > T(0) ? v : T(0);
        break;
      case Activation::kSigmoid:
        out[i] = sigmoid(v);
        break;
      case Activation::kIdentity:
        out[i] = v;
        break;
    }
  }
  return BasicTensor<T>::from_op(
      "activation", x.shape(), std::move(out), {x},
      [x, kind, beta, inv_sqrt2, inv_sqrt2pi](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        auto in = x.data();
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const T v = in[i];
          const T y = g.out[i];
          T d = 1;
          switch (kind) {
            case Activation::kGelu:
              d = T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) +
                  v * inv_sqrt2pi * std::exp(T(-0.5) * v * v);
              break;
            case Activation::kSwish:
            case Activation::kSilu: {
              const T sg = sigmoid(beta * v);
              d = sg + beta * v * sg * (T(1) - sg);
              break;
            }
            case Activation::kTanh:
              d = T(1) - y * y;
              break;
            case Activation::kRelu:
              d = v > T(0) ? T(1) : T(0);
              break;
            case Activation::kSigmoid:
              d = y * (T(1) - y);
              break;
            case Activation::kIdentity:
              break;
          }
          gx[i] += g.grad_out[i] * d;
        }
      });
}

template <typename T>
BasicTensor<T> layer_norm_channels(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                                   const BasicTensor<T>& offset, T eps) {
  if (!(eps > T(0))) throw ArgumentError("layer_norm_channels: eps must be positive");
  const auto& s = x.shape();
  const std::size_t c = s.c();
  if (gain.numel() != c || offset.numel() != c) {
    throw DimensionError("layer_norm_channels: gain/offset length != " + std::to_string(c));
  }
  const std::size_t plane = s.plane();
  auto src = x.data();
  auto gs = gain.data();
  auto os = offset.data();
  Buffer<T> out(src.size());
  Buffer<T> mu(s.n() * plane, T(0));
  Buffer<T> rstd(s.n() * plane, T(0));
  const T inv_c = T(1) / static_cast<T>(c);
  for (std::size_t n = 0; n < s.n(); ++n) {
    const T* in = src.data() + n * c * plane;
    T* m = mu.data() + n * plane;
    T* r = rstd.data() + n * plane;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < plane; ++p) m[p] += in[ch * plane + p];
    for (std::size_t p = 0; p < plane; ++p) m[p] *= inv_c;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < plane; ++p) {
        const T d = in[ch * plane + p] - m[p];
        r[p] += d * d;
      }
    for (std::size_t p = 0; p < plane; ++p) r[p] = T(1) / std::sqrt(r[p] * inv_c + eps);
    T* dst = out.data() + n * c * plane;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < plane; ++p)
        dst[ch * plane + p] = (in[ch * plane + p] - m[p]) * r[p] * gs[ch] + os[ch];
  }
  return BasicTensor<T>::from_op(
      "layer_norm_channels", s, std::move(out), {x, gain, offset},
      [x, gain, mu = std::move(mu), rstd = std::move(rstd), c, plane, inv_c,
       batch = s.n()](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        auto gg = g.input_grads[1];
        auto go = g.input_grads[2];
        auto src = x.data();
        auto gs = gain.data();
        Buffer<T> sum_d(plane), sum_dx(plane);
        for (std::size_t n = 0; n < batch; ++n) {
          const T* in = src.data() + n * c * plane;
          const T* gy = g.grad_out.data() + n * c * plane;
          const T* m = mu.data() + n * plane;
          const T* r = rstd.data() + n * plane;
          std::fill(sum_d.begin(), sum_d.end(), T(0));
          std::fill(sum_dx.begin(), sum_dx.end(), T(0));
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t p = 0; p < plane; ++p) {
              const std::size_t i = ch * plane + p;
              const T xhat = (in[i] - m[p]) * r[p];
              const T dxhat = gy[i] * gs[ch];
              sum_d[p] += dxhat;
              sum_dx[p] += dxhat * xhat;
              if (!gg.empty()) gg[ch] += gy[i] * xhat;
              if (!go.empty()) go[ch] += gy[i];
            }
          }
          if (gx.empty()) continue;
          T* dst = gx.data() + n * c * plane;
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t p = 0; p < plane; ++p) {
              const std::size_t i = ch * plane + p;
              const T xhat = (in[i] - m[p]) * r[p];
              const T dxhat = gy[i] * gs[ch];
              dst[i] += r[p] * (dxhat - sum_d[p] * inv_c - xhat * sum_dx[p] * inv_c);
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> drop_path(const BasicTensor<T>& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ArgumentError("drop_path: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  Buffer<T> factors(x.shape().n());
  const T survivor = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& f : factors) f = keep(rng) ? survivor : T(0);
  return scale_samples<T>(x, factors);
}

#define CLO_INSTANTIATE_LAYERS(T)                                                            \
  template BasicTensor<T> avg_pool2d(const BasicTensor<T>&, std::size_t);                    \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                            \
  template BasicTensor<T> softmax_tokens(const BasicTensor<T>&);                             \
  template BasicTensor<T> activation(Activation, const BasicTensor<T>&, T);                  \
  template BasicTensor<T> layer_norm_channels(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                              const BasicTensor<T>&, T);                     \
  template BasicTensor<T> drop_path(const BasicTensor<T>&, double, Rng&, bool);

CLO_INSTANTIATE_LAYERS(float)
CLO_INSTANTIATE_LAYERS(double)

}  // namespace clo
