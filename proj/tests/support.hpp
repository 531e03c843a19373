// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cloformer/cloformer.hpp"
#include "oracles/naive.hpp"

namespace testing_support {

template <typename T>
oracle::Vec to_vec(const clo::BasicTensor<T>& t) {
  return oracle::Vec(t.data().begin(), t.data().end());
}

template <typename T>
oracle::Dims dims_of(const clo::BasicTensor<T>& t) {
  const auto& s = t.shape();
  return {s.n(), s.c(), s.h(), s.w()};
}

template <typename T>
double max_diff(const clo::BasicTensor<T>& t, const oracle::Vec& ref) {
  const auto v = t.data();
  if (v.size() != ref.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) m = std::max(m, std::abs(double(v[i]) - ref[i]));
  return m;
}

inline std::size_t pick(clo::Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Four one-block stages of width 8/8/16/16 with unpooled attention.
inline clo::VariantSpec tiny_spec(std::size_t classes = 3) {
  clo::VariantSpec spec = clo::preset("xxs");
  spec.name = "tiny";
  spec.num_classes = classes;
  spec.stem_channels = 8;
  const std::size_t widths[4] = {8, 8, 16, 16};
  for (std::size_t i = 0; i < 4; ++i) {
    auto& st = spec.stages[i];
    st.blocks = 1;
    st.channels = widths[i];
    st.heads = widths[i] / 4;
    st.local_channels = widths[i] - 4;
    st.global_channels = 4;
    st.pool_stride = 1;
    st.ffn_ratio = 2;
  }
  return spec;
}

// Redraws a parameter in place; the default small init makes finite
// differences too noisy to compare.
template <typename T>
void redraw(clo::BasicTensor<T>& t, clo::Rng& rng, double stddev = 0.5) {
  if (!t.defined()) return;
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.mutable_data()) v = T(dist(rng));
}

inline double grad_error(const std::function<clo::Tensor64()>& f, clo::Tensor64 x,
                         std::uint64_t seed = 11) {
  return clo::gradient_error(f, std::move(x), seed);
}

}  // namespace testing_support
