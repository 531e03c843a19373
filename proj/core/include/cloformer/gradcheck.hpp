// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

#include "cloformer/tensor.hpp"

namespace clo {

using ScalarFn64 = std::function<double(const Tensor64&)>;

/// Central-difference gradient of a scalar function, one coordinate at a
/// time: (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). Throws NumericError if
/// f returns a non-finite value.
Tensor64 finite_diff_grad(const ScalarFn64& f, const Tensor64& x, double eps = 1e-4);

/// ||a - b||_2 / max(||a||_2, ||b||_2, floor). Returns 0 when both are
/// below `floor`.
double relative_error(const Tensor64& a, const Tensor64& b, double floor = 1e-12);

/// Relative error between the autodiff gradient of sum(f() * w) with
/// respect to the leaf `x` and its central finite difference, for a fixed
/// uniform random projection w drawn from `seed`. f must read x's storage.
double gradient_error(const std::function<Tensor64()>& f, Tensor64 x, std::uint64_t seed = 11,
                      double eps = 1e-4);

}  // namespace clo
