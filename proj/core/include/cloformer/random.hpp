// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "cloformer/tensor.hpp"

namespace clo {

/// Every stochastic routine takes one of these explicitly; there is no
/// library-wide generator.
using Rng = std::mt19937_64;

template <typename T>
BasicTensor<T> uniform(const Shape& shape, Rng& rng, T lo = T(-1), T hi = T(1));

template <typename T>
BasicTensor<T> normal(const Shape& shape, Rng& rng, T mean = T(0), T stddev = T(1));

/// Normal(0, stddev) redrawn until the sample lies within two deviations.
template <typename T>
BasicTensor<T> truncated_normal(const Shape& shape, Rng& rng, T stddev);

}  // namespace clo
