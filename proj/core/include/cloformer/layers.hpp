// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "cloformer/random.hpp"
#include "cloformer/tensor.hpp"

// Layer zoo: pointwise FC, depth-wise and dense convolution, pooling, token
// softmax, activations, channel layer norm, drop-path and the two attention
// kernels (pooled multi-head, non-overlapping window). Every function is a
// pure, differentiable map from its inputs and parameters to a new tensor.
namespace clo {

inline constexpr double kInitStddev = 0.02;

enum class PadMode { kZero, kCircular };

enum class Activation { kIdentity, kGelu, kSwish, kTanh, kRelu, kSilu, kSigmoid };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation kind);

/// Weight (C_out, C_in), optional bias (C_out). An undefined bias means none.
template <typename T>
struct LinearParams {
  BasicTensor<T> weight;
  BasicTensor<T> bias;

  std::size_t in_features() const { return weight.shape().extent(1); }
  std::size_t out_features() const { return weight.shape().extent(0); }
};

/// Weight (C_out, C_in / groups, k, k), optional bias (C_out).
template <typename T>
struct Conv2dParams {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  std::size_t stride = 1;
  std::size_t padding = 0;
  PadMode pad_mode = PadMode::kZero;
  std::size_t groups = 1;

  std::size_t kernel() const { return weight.shape().extent(2); }
  std::size_t out_channels() const { return weight.shape().extent(0); }
};

/// Output extent of a strided window: floor((in + 2 pad - k) / stride) + 1.
/// With pad = (k - 1) / 2 and odd k this is ceil(in / stride).
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

template <typename T>
LinearParams<T> make_linear(std::size_t in, std::size_t out, bool bias, Rng& rng,
                            T stddev = T(kInitStddev));

/// Depth-wise conv, same padding ((k - 1) / 2), one k x k kernel per channel.
template <typename T>
Conv2dParams<T> make_dwconv(std::size_t channels, std::size_t kernel, std::size_t stride,
                            bool bias, Rng& rng, T stddev = T(kInitStddev));

template <typename T>
Conv2dParams<T> make_conv(std::size_t in, std::size_t out, std::size_t kernel,
                          std::size_t stride, std::size_t padding, bool bias, Rng& rng,
                          T stddev = T(kInitStddev));

/// y[n, :, h, w] = W x[n, :, h, w] + b, i.e. a 1x1 convolution.
template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const LinearParams<T>& p);

/// Per-channel k x k correlation. Requires groups == C_in == C_out, odd k.
template <typename T>
BasicTensor<T> dwconv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p);

/// Dense convolution (groups == 1).
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p);

/// Non-overlapping s x s window means. s must divide H and W.
template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, std::size_t stride);

/// Mean over H and W, giving (N, C, 1, 1).
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

/// Softmax along the last (W) axis of every row, max-subtracted.
template <typename T>
BasicTensor<T> softmax_tokens(const BasicTensor<T>& scores);

/// Elementwise activation. `beta` only affects kSwish: x * sigmoid(beta x).
template <typename T>
BasicTensor<T> activation(Activation kind, const BasicTensor<T>& x, T beta = T(1));

/// Normalizes across channels at every (n, h, w), then applies gain/offset.
template <typename T>
BasicTensor<T> layer_norm_channels(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                                   const BasicTensor<T>& offset, T eps = T(1e-6));

/// Stochastic depth on a residual branch: in training each sample is zeroed
/// with probability `rate` and survivors are scaled by 1 / (1 - rate).
template <typename T>
BasicTensor<T> drop_path(const BasicTensor<T>& x, double rate, Rng& rng, bool training);

/// Multi-head scaled dot-product attention. Queries are the H x W tokens of
/// q; keys/values are the tokens of k/v (which may be spatially smaller).
/// Channels are split into `heads` contiguous groups of C / heads.
template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                    const BasicTensor<T>& v, std::size_t heads);

/// Self-attention restricted to non-overlapping window x window tiles
/// anchored at the origin; tiles on the right/bottom edges are clipped.
template <typename T>
BasicTensor<T> window_attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                const BasicTensor<T>& v, std::size_t heads,
                                std::size_t window);

}  // namespace clo
