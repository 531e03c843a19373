// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cloformer/error.hpp"

namespace clo {

namespace {

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (!a.shape().same_extents(b.shape())) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  auto x = a.data();
  auto y = b.data();
  Buffer<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return BasicTensor<T>::from_op("add", a.shape(), std::move(out), {a, b},
                                 [](const detail::BackwardArgs<T>& g) {
                                   for (auto dst : g.input_grads) {
                                     for (std::size_t i = 0; i < dst.size(); ++i)
                                       dst[i] += g.grad_out[i];
                                   }
                                 });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data();
  auto y = b.data();
  Buffer<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return BasicTensor<T>::from_op("sub", a.shape(), std::move(out), {a, b},
                                 [](const detail::BackwardArgs<T>& g) {
                                   auto ga = g.input_grads[0];
                                   auto gb = g.input_grads[1];
                                   for (std::size_t i = 0; i < ga.size(); ++i)
                                     ga[i] += g.grad_out[i];
                                   for (std::size_t i = 0; i < gb.size(); ++i)
                                     gb[i] -= g.grad_out[i];
                                 });
}

template <typename T>
BasicTensor<T> hadamard(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "hadamard");
  auto x = a.data();
  auto y = b.data();
  Buffer<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return BasicTensor<T>::from_op(
      "hadamard", a.shape(), std::move(out), {a, b},
      [a, b](const detail::BackwardArgs<T>& g) {
        auto ga = g.input_grads[0];
        auto gb = g.input_grads[1];
        auto x = a.data();
        auto y = b.data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.grad_out[i] * y[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.grad_out[i] * x[i];
      });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  auto x = a.data();
  Buffer<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return BasicTensor<T>::from_op("scale", a.shape(), std::move(out), {a},
                                 [factor](const detail::BackwardArgs<T>& g) {
                                   auto ga = g.input_grads[0];
                                   for (std::size_t i = 0; i < ga.size(); ++i)
                                     ga[i] += g.grad_out[i] * factor;
                                 });
}

template <typename T>
BasicTensor<T> scale_samples(const BasicTensor<T>& a, std::span<const T> factors) {
  const auto& s = a.shape();
  if (factors.size() != s.n()) {
    throw DimensionError("scale_samples: " + std::to_string(factors.size()) +
                         " factors for batch " + std::to_string(s.n()));
  }
  const std::size_t per = s.numel() / s.n();
  Buffer<T> f(factors.begin(), factors.end());
  auto x = a.data();
  Buffer<T> out(x.size());
  for (std::size_t n = 0; n < s.n(); ++n)
    for (std::size_t i = 0; i < per; ++i) out[n * per + i] = x[n * per + i] * f[n];
  return BasicTensor<T>::from_op("scale_samples", s, std::move(out), {a},
                                 [f, per](const detail::BackwardArgs<T>& g) {
                                   auto ga = g.input_grads[0];
                                   for (std::size_t n = 0; n < f.size(); ++n)
                                     for (std::size_t i = 0; i < per; ++i)
                                       ga[n * per + i] += g.grad_out[n * per + i] * f[n];
                                 });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T total = 0;
  for (T v : a.data()) total += v;
  return BasicTensor<T>::from_op("sum", Shape::scalar(), {total}, {a},
                                 [](const detail::BackwardArgs<T>& g) {
                                   const T go = g.grad_out[0];
                                   for (T& v : g.input_grads[0]) v += go;
                                 });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
BasicTensor<T> weighted_sum(const BasicTensor<T>& a, const BasicTensor<T>& weights) {
  require_same_shape(a, weights, "weighted_sum");
  auto x = a.data();
  auto w = weights.data();
  T total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * w[i];
  return BasicTensor<T>::from_op("weighted_sum", Shape::scalar(), {total}, {a},
                                 [w = weights](const detail::BackwardArgs<T>& g) {
                                   const T go = g.grad_out[0];
                                   auto wd = w.data();
                                   auto ga = g.input_grads[0];
                                   for (std::size_t i = 0; i < ga.size(); ++i)
                                     ga[i] += go * wd[i];
                                 });
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.n() != sb.n() || sa.h() != sb.h() || sa.w() != sb.w()) {
    throw DimensionError("concat_channels: batch/spatial mismatch " + sa.str() + " vs " +
                         sb.str());
  }
  const std::size_t plane = sa.plane();
  const std::size_t ca = sa.c() * plane;
  const std::size_t cb = sb.c() * plane;
  Buffer<T> out(sa.numel() + sb.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t n = 0; n < sa.n(); ++n) {
    std::copy_n(x.begin() + n * ca, ca, out.begin() + n * (ca + cb));
    std::copy_n(y.begin() + n * cb, cb, out.begin() + n * (ca + cb) + ca);
  }
  const Shape shape = Shape::nchw(sa.n(), sa.c() + sb.c(), sa.h(), sa.w());
  return BasicTensor<T>::from_op(
      "concat_channels", shape, std::move(out), {a, b},
      [ca, cb, batch = sa.n()](const detail::BackwardArgs<T>& g) {
        auto ga = g.input_grads[0];
        auto gb = g.input_grads[1];
        for (std::size_t n = 0; n < batch; ++n) {
          const T* src = g.grad_out.data() + n * (ca + cb);
          if (!ga.empty())
            for (std::size_t i = 0; i < ca; ++i) ga[n * ca + i] += src[i];
          if (!gb.empty())
            for (std::size_t i = 0; i < cb; ++i) gb[n * cb + i] += src[ca + i];
        }
      });
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end) {
  const auto& s = x.shape();
  if (begin >= end || end > s.c()) {
    throw ArgumentError("slice_channels: range [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") invalid for " + std::to_string(s.c()) +
                        " channels");
  }
  const std::size_t plane = s.plane();
  const std::size_t width = (end - begin) * plane;
  const std::size_t stride = s.c() * plane;
  const std::size_t offset = begin * plane;
  Buffer<T> out(s.n() * width);
  auto src = x.data();
  for (std::size_t n = 0; n < s.n(); ++n)
    std::copy_n(src.begin() + n * stride + offset, width, out.begin() + n * width);
  return BasicTensor<T>::from_op(
      "slice_channels", Shape::nchw(s.n(), end - begin, s.h(), s.w()), std::move(out), {x},
      [=, batch = s.n()](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        for (std::size_t n = 0; n < batch; ++n)
          for (std::size_t i = 0; i < width; ++i)
            gx[n * stride + offset + i] += g.grad_out[n * width + i];
      });
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x,
                                                         std::size_t at) {
  const std::size_t c = x.shape().c();
  if (at == 0 || at >= c) {
    throw ArgumentError("split_channels: split point " + std::to_string(at) +
                        " outside (0, " + std::to_string(c) + ")");
  }
  return {slice_channels(x, 0, at), slice_channels(x, at, c)};
}

template <typename T>
BasicTensor<T> roll_spatial(const BasicTensor<T>& x, long dy, long dx) {
  const auto& s = x.shape();
  const long h = static_cast<long>(s.h());
  const long w = static_cast<long>(s.w());
  auto wrap = [](long v, long m) { return static_cast<std::size_t>(((v % m) + m) % m); };
  const std::size_t planes = s.n() * s.c();
  std::vector<std::size_t> map(s.plane());
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j)
      map[static_cast<std::size_t>(i * w + j)] = wrap(i + dy, h) * s.w() + wrap(j + dx, w);
  auto src = x.data();
  Buffer<T> out(src.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < map.size(); ++i)
      out[p * map.size() + map[i]] = src[p * map.size() + i];
  return BasicTensor<T>::from_op("roll_spatial", s, std::move(out), {x},
                                 [map, planes](const detail::BackwardArgs<T>& g) {
                                   auto gx = g.input_grads[0];
                                   const std::size_t pl = map.size();
                                   for (std::size_t p = 0; p < planes; ++p)
                                     for (std::size_t i = 0; i < pl; ++i)
                                       gx[p * pl + i] += g.grad_out[p * pl + map[i]];
                                 });
}

template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  auto x = a.data();
  auto y = b.data();
  T worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

template <typename T>
bool all_finite(const BasicTensor<T>& a) {
  for (T v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

#define CLO_INSTANTIATE_OPS(T)                                                            \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> hadamard(const BasicTensor<T>&, const BasicTensor<T>&);         \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                \
  template BasicTensor<T> scale_samples(const BasicTensor<T>&, std::span<const T>);       \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                     \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                    \
  template BasicTensor<T> weighted_sum(const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);  \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&, \
                                                                    std::size_t);          \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::size_t, std::size_t); \
  template BasicTensor<T> roll_spatial(const BasicTensor<T>&, long, long);                \
  template T max_abs_diff(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template bool all_finite(const BasicTensor<T>&);

CLO_INSTANTIATE_OPS(float)
CLO_INSTANTIATE_OPS(double)

}  // namespace clo
