// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <string>
#include <vector>

#include "cloformer/error.hpp"
#include "cloformer/layers.hpp"

namespace clo {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// A maximal stretch of outputs [o_begin, o_end) whose source index is
/// i_begin + (o - o_begin) * stride, all in range.
struct Run {
  std::size_t o_begin;
  std::size_t o_end;
  std::size_t i_begin;
};

/// For one kernel tap along one axis: runs of valid (output, input) pairs.
std::vector<Run> tap_runs(std::size_t in, std::size_t out, std::size_t tap, std::size_t stride,
                          std::size_t padding, PadMode mode) {
  std::vector<Run> runs;
  const long len = static_cast<long>(in);
  long prev = -1;
  for (std::size_t o = 0; o < out; ++o) {
    long src = static_cast<long>(o * stride + tap) - static_cast<long>(padding);
    if (mode == PadMode::kCircular) {
      src = ((src % len) + len) % len;
    } else if (src < 0 || src >= len) {
      prev = -1;
      continue;
    }
    if (!runs.empty() && prev >= 0 && runs.back().o_end == o &&
        src == prev + static_cast<long>(stride)) {
      runs.back().o_end = o + 1;
    } else {
      runs.push_back({o, o + 1, static_cast<std::size_t>(src)});
    }
    prev = src;
  }
  return runs;
}

/// Source row for every (output row, kernel row); -1 marks zero padding.
std::vector<long> row_table(std::size_t in, std::size_t out, std::size_t k, std::size_t stride,
                            std::size_t padding, PadMode mode) {
  std::vector<long> table(out * k);
  const long len = static_cast<long>(in);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t t = 0; t < k; ++t) {
      long src = static_cast<long>(o * stride + t) - static_cast<long>(padding);
      if (mode == PadMode::kCircular) {
        src = ((src % len) + len) % len;
      } else if (src < 0 || src >= len) {
        src = -1;
      }
      table[o * k + t] = src;
    }
  }
  return table;
}

struct Geometry {
  std::size_t h, w, ho, wo, k, stride;
  std::vector<long> rows;                 // (ho, k)
  std::vector<std::vector<Run>> col_runs;  // per kernel column
};

template <typename T>
Geometry make_geometry(const Shape& s, const Conv2dParams<T>& p) {
  Geometry g;
  g.h = s.h();
  g.w = s.w();
  g.k = p.kernel();
  g.stride = p.stride;
  g.ho = conv_output_extent(g.h, g.k, p.stride, p.padding);
  g.wo = conv_output_extent(g.w, g.k, p.stride, p.padding);
  g.rows = row_table(g.h, g.ho, g.k, p.stride, p.padding, p.pad_mode);
  for (std::size_t t = 0; t < g.k; ++t)
    g.col_runs.push_back(tap_runs(g.w, g.wo, t, p.stride, p.padding, p.pad_mode));
  return g;
}

/// out_plane += correlation of in_plane with kernel (k x k).
template <typename T>
void correlate_plane(const Geometry& g, const T* in, const T* kernel, T* out) {
  for (std::size_t oy = 0; oy < g.ho; ++oy) {
    T* out_row = out + oy * g.wo;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      const long iy = g.rows[oy * g.k + ky];
      if (iy < 0) continue;
      const T* in_row = in + static_cast<std::size_t>(iy) * g.w;
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T wv = kernel[ky * g.k + kx];
        for (const Run& r : g.col_runs[kx]) {
          const T* src = in_row + r.i_begin;
          if (g.stride == 1) {
            for (std::size_t o = r.o_begin; o < r.o_end; ++o) out_row[o] += wv * src[o - r.o_begin];
          } else {
            for (std::size_t o = r.o_begin; o < r.o_end; ++o)
              out_row[o] += wv * src[(o - r.o_begin) * g.stride];
          }
        }
      }
    }
  }
}

/// Backward of correlate_plane: accumulates input and kernel gradients.
template <typename T>
void correlate_plane_backward(const Geometry& g, const T* in, const T* kernel, const T* gout,
                              T* gin, T* gkernel) {
  for (std::size_t oy = 0; oy < g.ho; ++oy) {
    const T* go_row = gout + oy * g.wo;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      const long iy = g.rows[oy * g.k + ky];
      if (iy < 0) continue;
      const std::size_t row = static_cast<std::size_t>(iy) * g.w;
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T wv = kernel[ky * g.k + kx];
        T acc = 0;
        for (const Run& r : g.col_runs[kx]) {
          for (std::size_t o = r.o_begin; o < r.o_end; ++o) {
            const std::size_t ix = row + r.i_begin + (o - r.o_begin) * g.stride;
            if (gin) gin[ix] += wv * go_row[o];
            acc += go_row[o] * in[ix];
          }
        }
        if (gkernel) gkernel[ky * g.k + kx] += acc;
      }
    }
  }
}

template <typename T>
void check_conv_common(const Shape& s, const Conv2dParams<T>& p, const char* op) {
  if (!p.weight.defined() || p.weight.shape().rank() != 4) {
    throw ArgumentError(std::string(op) + ": weight must be a rank-4 tensor");
  }
  const std::size_t k = p.kernel();
  if (p.weight.shape().extent(3) != k) {
    throw ArgumentError(std::string(op) + ": kernel must be square, got " +
                        p.weight.shape().str());
  }
  if (p.padding > 0 && k % 2 == 0) {
    throw ArgumentError(std::string(op) + ": padded convolution needs an odd kernel, got " +
                        std::to_string(k));
  }
  if (p.stride == 0) throw ArgumentError(std::string(op) + ": stride must be positive");
  if (p.bias.defined() && p.bias.numel() != p.out_channels()) {
    throw DimensionError(std::string(op) + ": bias length " + std::to_string(p.bias.numel()) +
                         " != out channels " + std::to_string(p.out_channels()));
  }
  if (p.pad_mode == PadMode::kCircular && p.padding > 0 && (s.h() < 1 || s.w() < 1)) {
    throw DimensionError(std::string(op) + ": empty input");
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw ArgumentError("stride must be positive");
  if (in + 2 * padding < kernel) {
    throw DimensionError("input extent " + std::to_string(in) + " smaller than kernel " +
                         std::to_string(kernel) + " after padding");
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

template <typename T>
LinearParams<T> make_linear(std::size_t in, std::size_t out, bool bias, Rng& rng, T stddev) {
  LinearParams<T> p;
  p.weight = truncated_normal<T>(Shape{out, in}, rng, stddev);
  if (bias) p.bias = BasicTensor<T>::zeros(Shape{out});
  return p;
}

template <typename T>
Conv2dParams<T> make_dwconv(std::size_t channels, std::size_t kernel, std::size_t stride,
                            bool bias, Rng& rng, T stddev) {
  if (kernel % 2 == 0) {
    throw ArgumentError("depth-wise kernel must be odd, got " + std::to_string(kernel));
  }
  Conv2dParams<T> p;
  p.weight = truncated_normal<T>(Shape{channels, 1, kernel, kernel}, rng, stddev);
  if (bias) p.bias = BasicTensor<T>::zeros(Shape{channels});
  p.stride = stride;
  p.padding = (kernel - 1) / 2;
  p.groups = channels;
  return p;
}

template <typename T>
Conv2dParams<T> make_conv(std::size_t in, std::size_t out, std::size_t kernel,
                          std::size_t stride, std::size_t padding, bool bias, Rng& rng,
                          T stddev) {
  Conv2dParams<T> p;
  p.weight = truncated_normal<T>(Shape{out, in, kernel, kernel}, rng, stddev);
  if (bias) p.bias = BasicTensor<T>::zeros(Shape{out});
  p.stride = stride;
  p.padding = padding;
  p.groups = 1;
  return p;
}

template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const LinearParams<T>& p) {
  const auto& s = x.shape();
  const std::size_t cin = p.in_features();
  const std::size_t cout = p.out_features();
  if (s.c() != cin) {
    throw DimensionError("fully_connected: input has " + std::to_string(s.c()) +
                         " channels, weight expects " + std::to_string(cin));
  }
  const bool has_bias = p.bias.defined();
  if (has_bias && p.bias.numel() != cout) {
    throw DimensionError("fully_connected: bias length mismatch");
  }
  const std::size_t plane = s.plane();
  const Shape out_shape = s.rank() <= 2 ? Shape{s.n(), cout} : Shape::nchw(s.n(), cout, s.h(), s.w());
  Buffer<T> out(s.n() * cout * plane);

  Eigen::Map<const RowMat<T>> weight(p.weight.data().data(), cout, cin);
  const T* xs = x.data().data();
  for (std::size_t n = 0; n < s.n(); ++n) {
    Eigen::Map<const RowMat<T>> xm(xs + n * cin * plane, cin, plane);
    Eigen::Map<RowMat<T>> ym(out.data() + n * cout * plane, cout, plane);
    ym.noalias() = weight * xm;
    if (has_bias) {
      Eigen::Map<const Vec<T>> b(p.bias.data().data(), cout);
      ym.colwise() += b;
    }
  }

  std::vector<BasicTensor<T>> inputs{x, p.weight};
  if (has_bias) inputs.push_back(p.bias);
  return BasicTensor<T>::from_op(
      "fully_connected", out_shape, std::move(out), inputs,
      [x, w = p.weight, cin, cout, plane, batch = s.n()](const detail::BackwardArgs<T>& g) {
        Eigen::Map<const RowMat<T>> weight(w.data().data(), cout, cin);
        auto gx = g.input_grads[0];
        auto gw = g.input_grads[1];
        std::span<T> gb = g.input_grads.size() > 2 ? g.input_grads[2] : std::span<T>();
        for (std::size_t n = 0; n < batch; ++n) {
          Eigen::Map<const RowMat<T>> gy(g.grad_out.data() + n * cout * plane, cout, plane);
          if (!gx.empty()) {
            Eigen::Map<RowMat<T>> gxm(gx.data() + n * cin * plane, cin, plane);
            gxm.noalias() += weight.transpose() * gy;
          }
          if (!gw.empty()) {
            Eigen::Map<const RowMat<T>> xm(x.data().data() + n * cin * plane, cin, plane);
            Eigen::Map<RowMat<T>> gwm(gw.data(), cout, cin);
            gwm.noalias() += gy * xm.transpose();
          }
          if (!gb.empty()) {
            Eigen::Map<Vec<T>> gbm(gb.data(), cout);
            gbm += gy.rowwise().sum();
          }
        }
      });
}

template <typename T>
BasicTensor<T> dwconv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  const auto& s = x.shape();
  check_conv_common(s, p, "dwconv2d");
  const std::size_t c = s.c();
  const std::size_t k = p.kernel();
  if (k % 2 == 0) throw ArgumentError("dwconv2d: even kernel " + std::to_string(k));
  if (p.groups != c || p.out_channels() != c || p.weight.shape().extent(1) != 1) {
    throw DimensionError("dwconv2d: weight " + p.weight.shape().str() +
                         " is not depth-wise for " + std::to_string(c) + " channels");
  }
  if (p.stride > 2) throw ArgumentError("dwconv2d: stride must be 1 or 2");
  Geometry geo = make_geometry(s, p);
  const std::size_t in_plane = s.plane();
  const std::size_t out_plane = geo.ho * geo.wo;
  Buffer<T> out(s.n() * c * out_plane, T(0));
  const T* xs = x.data().data();
  const T* ws = p.weight.data().data();
  const bool has_bias = p.bias.defined();
  for (std::size_t n = 0; n < s.n(); ++n) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* dst = out.data() + (n * c + ch) * out_plane;
      if (has_bias) std::fill_n(dst, out_plane, p.bias.data()[ch]);
      correlate_plane(geo, xs + (n * c + ch) * in_plane, ws + ch * k * k, dst);
    }
  }
  std::vector<BasicTensor<T>> inputs{x, p.weight};
  if (has_bias) inputs.push_back(p.bias);
  return BasicTensor<T>::from_op(
      "dwconv2d", Shape::nchw(s.n(), c, geo.ho, geo.wo), std::move(out), inputs,
      [x, w = p.weight, geo = std::move(geo), c, k, in_plane, out_plane,
       batch = s.n()](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        auto gw = g.input_grads[1];
        std::span<T> gb = g.input_grads.size() > 2 ? g.input_grads[2] : std::span<T>();
        const T* xs = x.data().data();
        const T* ws = w.data().data();
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const T* go = g.grad_out.data() + (n * c + ch) * out_plane;
            correlate_plane_backward(geo, xs + (n * c + ch) * in_plane, ws + ch * k * k, go,
                                     gx.empty() ? nullptr : gx.data() + (n * c + ch) * in_plane,
                                     gw.empty() ? nullptr : gw.data() + ch * k * k);
            if (!gb.empty()) {
              T acc = 0;
              for (std::size_t i = 0; i < out_plane; ++i) acc += go[i];
              gb[ch] += acc;
            }
          }
        }
      });
}

namespace {

/// cols (C_in * k * k, ho * wo) for one sample.
template <typename T>
void im2col(const Geometry& g, std::size_t cin, const T* in, T* cols) {
  const std::size_t out_plane = g.ho * g.wo;
  const std::size_t in_plane = g.h * g.w;
  std::fill_n(cols, cin * g.k * g.k * out_plane, T(0));
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* dst = cols + ((ci * g.k + ky) * g.k + kx) * out_plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = g.rows[oy * g.k + ky];
          if (iy < 0) continue;
          const T* src = in + ci * in_plane + static_cast<std::size_t>(iy) * g.w;
          for (const Run& r : g.col_runs[kx])
            for (std::size_t o = r.o_begin; o < r.o_end; ++o)
              dst[oy * g.wo + o] = src[r.i_begin + (o - r.o_begin) * g.stride];
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const Geometry& g, std::size_t cin, const T* cols, T* in) {
  const std::size_t out_plane = g.ho * g.wo;
  const std::size_t in_plane = g.h * g.w;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* src = cols + ((ci * g.k + ky) * g.k + kx) * out_plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = g.rows[oy * g.k + ky];
          if (iy < 0) continue;
          T* dst = in + ci * in_plane + static_cast<std::size_t>(iy) * g.w;
          for (const Run& r : g.col_runs[kx])
            for (std::size_t o = r.o_begin; o < r.o_end; ++o)
              dst[r.i_begin + (o - r.o_begin) * g.stride] += src[oy * g.wo + o];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  const auto& s = x.shape();
  check_conv_common(s, p, "conv2d");
  if (p.groups != 1) throw ArgumentError("conv2d: only groups == 1 is supported");
  const std::size_t cin = s.c();
  const std::size_t cout = p.out_channels();
  const std::size_t k = p.kernel();
  if (p.weight.shape().extent(1) != cin) {
    throw DimensionError("conv2d: input has " + std::to_string(cin) + " channels, weight " +
                         p.weight.shape().str());
  }
  Geometry geo = make_geometry(s, p);
  const std::size_t in_plane = s.plane();
  const std::size_t out_plane = geo.ho * geo.wo;
  const std::size_t depth = cin * k * k;
  Buffer<T> out(s.n() * cout * out_plane);
  Buffer<T> cols(depth * out_plane);
  Eigen::Map<const RowMat<T>> weight(p.weight.data().data(), cout, depth);
  const bool has_bias = p.bias.defined();
  for (std::size_t n = 0; n < s.n(); ++n) {
    im2col(geo, cin, x.data().data() + n * cin * in_plane, cols.data());
    Eigen::Map<const RowMat<T>> cm(cols.data(), depth, out_plane);
    Eigen::Map<RowMat<T>> ym(out.data() + n * cout * out_plane, cout, out_plane);
    ym.noalias() = weight * cm;
    if (has_bias) ym.colwise() += Eigen::Map<const Vec<T>>(p.bias.data().data(), cout);
  }
  std::vector<BasicTensor<T>> inputs{x, p.weight};
  if (has_bias) inputs.push_back(p.bias);
  return BasicTensor<T>::from_op(
      "conv2d", Shape::nchw(s.n(), cout, geo.ho, geo.wo), std::move(out), inputs,
      [x, w = p.weight, geo = std::move(geo), cin, cout, depth, in_plane, out_plane,
       batch = s.n()](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        auto gw = g.input_grads[1];
        std::span<T> gb = g.input_grads.size() > 2 ? g.input_grads[2] : std::span<T>();
        Eigen::Map<const RowMat<T>> weight(w.data().data(), cout, depth);
        Buffer<T> cols(depth * out_plane);
        RowMat<T> gcols;
        for (std::size_t n = 0; n < batch; ++n) {
          Eigen::Map<const RowMat<T>> gy(g.grad_out.data() + n * cout * out_plane, cout,
                                         out_plane);
          if (!gw.empty()) {
            im2col(geo, cin, x.data().data() + n * cin * in_plane, cols.data());
            Eigen::Map<const RowMat<T>> cm(cols.data(), depth, out_plane);
            Eigen::Map<RowMat<T>> gwm(gw.data(), cout, depth);
            gwm.noalias() += gy * cm.transpose();
          }
          if (!gx.empty()) {
            gcols.noalias() = weight.transpose() * gy;
            col2im_add(geo, cin, gcols.data(), gx.data() + n * cin * in_plane);
          }
          if (!gb.empty()) Eigen::Map<Vec<T>>(gb.data(), cout) += gy.rowwise().sum();
        }
      });
}

#define CLO_INSTANTIATE_CONV(T)                                                              \
  template LinearParams<T> make_linear(std::size_t, std::size_t, bool, Rng&, T);             \
  template Conv2dParams<T> make_dwconv(std::size_t, std::size_t, std::size_t, bool, Rng&, T); \
  template Conv2dParams<T> make_conv(std::size_t, std::size_t, std::size_t, std::size_t,     \
                                     std::size_t, bool, Rng&, T);                            \
  template BasicTensor<T> fully_connected(const BasicTensor<T>&, const LinearParams<T>&);    \
  template BasicTensor<T> dwconv2d(const BasicTensor<T>&, const Conv2dParams<T>&);           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const Conv2dParams<T>&);

CLO_INSTANTIATE_CONV(float)
CLO_INSTANTIATE_CONV(double)

}  // namespace clo
