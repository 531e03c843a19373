// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>

#include "cloformer/tensor.hpp"

// Elementwise and shape operations on BasicTensor. All are differentiable.
namespace clo {

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Elementwise product; shapes must agree exactly.
template <typename T>
BasicTensor<T> hadamard(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

/// Per-sample scaling: every element of sample n is multiplied by factors[n].
template <typename T>
BasicTensor<T> scale_samples(const BasicTensor<T>& a, std::span<const T> factors);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

/// Σ a ⊙ weights, with `weights` treated as a constant.
template <typename T>
BasicTensor<T> weighted_sum(const BasicTensor<T>& a, const BasicTensor<T>& weights);

/// Concatenates along channels, `a` first. N, H and W must agree.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Splits channels into [0, at) and [at, C). Requires 0 < at < C.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x,
                                                         std::size_t at);

/// Channels [begin, end) as a new tensor.
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end);

/// Circular spatial shift: out[.., (h+dy) mod H, (w+dx) mod W] = x[.., h, w].
template <typename T>
BasicTensor<T> roll_spatial(const BasicTensor<T>& x, long dy, long dx);

/// Largest |a - b| over matching elements.
template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
bool all_finite(const BasicTensor<T>& a);

}  // namespace clo
