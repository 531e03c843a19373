// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"
#include "cloformer/random.hpp"

namespace clo {

Tensor64 finite_diff_grad(const ScalarFn64& f, const Tensor64& x, double eps) {
  if (!(eps > 0)) throw ArgumentError("finite_diff_grad: eps must be positive");
  NoGradGuard no_grad;
  std::vector<double> probe(x.data().begin(), x.data().end());
  std::vector<double> grad(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = f(Tensor64(x.shape(), probe));
    probe[i] = saved - eps;
    const double down = f(Tensor64(x.shape(), probe));
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at element " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2 * eps);
  }
  return Tensor64(x.shape(), std::move(grad));
}

double relative_error(const Tensor64& a, const Tensor64& b, double floor) {
  if (!a.shape().same_extents(b.shape())) {
    throw DimensionError("relative_error: shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
  double diff = 0, na = 0, nb = 0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += (x[i] - y[i]) * (x[i] - y[i]);
    na += x[i] * x[i];
    nb += y[i] * y[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), floor});
  if (std::sqrt(na) < floor && std::sqrt(nb) < floor) return 0.0;
  return std::sqrt(diff) / denom;
}

double gradient_error(const std::function<Tensor64()>& f, Tensor64 x, std::uint64_t seed,
                      double eps) {
  if (!x.is_leaf()) throw ArgumentError("gradient_error: x must be a leaf tensor");
  const bool had_grad = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  Tensor64 probe_shape;
  {
    NoGradGuard no_grad;
    probe_shape = f();
  }
  Rng rng(seed);
  const Tensor64 w = uniform<double>(probe_shape.shape(), rng);
  weighted_sum(f(), w).backward();
  const Tensor64 analytic = x.grad();
  const Tensor64 numeric = finite_diff_grad(
      [&](const Tensor64& probe) {
        auto values = x.mutable_data();
        const std::vector<double> saved(values.begin(), values.end());
        std::copy(probe.data().begin(), probe.data().end(), values.begin());
        double out;
        {
          NoGradGuard no_grad;
          out = weighted_sum(f(), w).item();
        }
        std::copy(saved.begin(), saved.end(), values.begin());
        return out;
      },
      x.detach(), eps);
  x.zero_grad();
  x.set_requires_grad(had_grad);
  return relative_error(analytic, numeric);
}

}  // namespace clo
