// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/random.hpp"

#include <cmath>
#include <vector>

namespace clo {

template <typename T>
BasicTensor<T> uniform(const Shape& shape, Rng& rng, T lo, T hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Buffer<T> values(shape.numel());
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return BasicTensor<T>(shape, std::move(values));
}

template <typename T>
BasicTensor<T> normal(const Shape& shape, Rng& rng, T mean, T stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  Buffer<T> values(shape.numel());
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return BasicTensor<T>(shape, std::move(values));
}

template <typename T>
BasicTensor<T> truncated_normal(const Shape& shape, Rng& rng, T stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Buffer<T> values(shape.numel());
  for (auto& v : values) {
    double z = dist(rng);
    while (std::abs(z) > 2.0) z = dist(rng);
    v = static_cast<T>(z * stddev);
  }
  return BasicTensor<T>(shape, std::move(values));
}

template BasicTensor<float> uniform(const Shape&, Rng&, float, float);
template BasicTensor<double> uniform(const Shape&, Rng&, double, double);
template BasicTensor<float> normal(const Shape&, Rng&, float, float);
template BasicTensor<double> normal(const Shape&, Rng&, double, double);
template BasicTensor<float> truncated_normal(const Shape&, Rng&, float);
template BasicTensor<double> truncated_normal(const Shape&, Rng&, double);

}  // namespace clo
