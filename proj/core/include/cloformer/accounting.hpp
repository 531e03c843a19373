// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cloformer/model.hpp"

namespace clo {

struct CostEntry {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

/// One multiply-accumulate counts as one FLOP (conv, FC, attention
/// matmuls); average pooling counts one add per input element; norms,
/// activations and elementwise products are free. Batch size 1.
struct CostReport {
  std::vector<CostEntry> breakdown;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
  std::size_t input_h = 0;
  std::size_t input_w = 0;

  void add(std::string name, std::uint64_t params, std::uint64_t flops);
  std::string to_text() const;
  /// `name,params,flops` rows under a header line.
  std::string to_csv() const;
};

/// One entry per parameter-owning module (dotted name without the final
/// `.weight`/`.bias`/`.gain`/`.offset`).
template <typename T>
CostReport count_params(const BasicModel<T>& m);

/// Walks the network at the given input resolution. Parameter columns are
/// filled as well; entries without parameters (pooling, attention products)
/// carry FLOPs only.
template <typename T>
CostReport count_flops(const BasicModel<T>& m, std::size_t height, std::size_t width);

}  // namespace clo
