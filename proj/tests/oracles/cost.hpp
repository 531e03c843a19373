// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form parameter and FLOP totals for the default configuration
// (conv stem, full local branch, one inner activation in the gate), written
// from the layer list alone. One MAC counts as one FLOP.

#include <cstdint>

#include "cloformer/variant.hpp"

namespace oracle {

inline std::uint64_t closed_form_params(const clo::VariantSpec& v) {
  const std::uint64_t m = v.stem_channels;
  const std::uint64_t c1 = v.stages[0].channels;
  std::uint64_t total = 0;
  total += 27 * m + m + 2 * m;
  total += 9 * m * c1 + c1 + 2 * c1;
  total += 2 * (9 * c1 * c1 + c1 + 2 * c1);
  total += c1 * c1 + c1;
  for (int s = 0; s < 4; ++s) {
    const auto& st = v.stages[s];
    const std::uint64_t c = st.channels;
    const std::uint64_t cl = st.local_channels;
    const std::uint64_t k = st.attn_kernel;
    const std::uint64_t r = st.ffn_ratio;
    const std::uint64_t kf = st.ffn_kernel * st.ffn_kernel;
    for (std::size_t j = 0; j < st.blocks; ++j) {
      total += 2 * c;                            // norm1
      total += 3 * c * c + 3 * c;                // qkv
      total += 3 * (cl * k * k + cl);            // dw_q, dw_k, dw_v
      total += 2 * (cl * cl + cl);               // gate FCs
      total += c * c + c;                        // fuse
      total += 2 * c;                            // norm2
      total += c * r * c + r * c;                // fc_in
      total += r * c * kf + r * c;               // dw
      const bool cross = s < 3 && j + 1 == st.blocks;
      const std::uint64_t out = cross ? v.stages[s + 1].channels : c;
      total += r * c * out + out;                // fc_out
      if (cross) {
        total += (v.skip == clo::SkipConv::kDense ? c * c * kf : c * kf) + c;
        total += c * out + out;
      }
    }
  }
  total += v.stages[3].channels * v.num_classes + v.num_classes;
  return total;
}

inline std::uint64_t closed_form_flops(const clo::VariantSpec& v, std::uint64_t hw) {
  const std::uint64_t m = v.stem_channels;
  const std::uint64_t c1 = v.stages[0].channels;
  const std::uint64_t t_half = (hw / 2) * (hw / 2);
  const std::uint64_t t_quarter = (hw / 4) * (hw / 4);
  std::uint64_t total = 27 * m * t_half + 9 * m * c1 * t_quarter + 2 * 9 * c1 * c1 * t_quarter +
                        c1 * c1 * t_quarter;
  std::uint64_t side = hw / 4;
  for (int s = 0; s < 4; ++s) {
    const auto& st = v.stages[s];
    const std::uint64_t c = st.channels;
    const std::uint64_t cl = st.local_channels;
    const std::uint64_t cg = st.global_channels;
    const std::uint64_t k = st.attn_kernel;
    const std::uint64_t p = st.pool_stride;
    const std::uint64_t r = st.ffn_ratio;
    const std::uint64_t kf = st.ffn_kernel * st.ffn_kernel;
    const std::uint64_t t = side * side;
    for (std::size_t j = 0; j < st.blocks; ++j) {
      total += 3 * c * c * t;
      total += 3 * cl * k * k * t + 2 * cl * cl * t;
      if (p > 1) total += 2 * cg * t;
      total += 2 * t * (t / (p * p)) * cg;
      total += c * c * t;
      const bool cross = s < 3 && j + 1 == st.blocks;
      if (!cross) {
        total += 2 * r * c * c * t + r * c * kf * t;
      } else {
        const std::uint64_t cn = v.stages[s + 1].channels;
        const std::uint64_t tn = t / 4;
        total += r * c * c * t + r * c * kf * tn + r * c * cn * tn;
        total += (v.skip == clo::SkipConv::kDense ? c * c * kf : c * kf) * tn + c * cn * tn;
      }
    }
    side /= 2;
  }
  const std::uint64_t c4 = v.stages[3].channels;
  total += c4 * (hw / 32) * (hw / 32) + c4 * v.num_classes;
  return total;
}

}  // namespace oracle
