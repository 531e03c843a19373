// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cloformer/layers.hpp"
#include "cloformer/variant.hpp"

namespace clo {

/// Local-branch parameters over C_l channels. Which members are present
/// depends on `config.kind`:
///
///   shared_only              dw_v
///   context_only             dw_q, dw_k, fcs
///   window_attn              (none)
///   window_attn_plus_shared  dw_v
///   full                     dw_q, dw_k, dw_v, fcs
///
/// dw_k is also absent when use_k is false; dw_q/dw_k are absent when
/// qk_dwconv is false. `fcs` holds gate_depth + 1 square FCs (none for
/// gate_depth 0).
template <typename T>
struct AttnConvParams {
  LocalConfig config{};
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t head_dim = 1;  // d
  std::optional<Conv2dParams<T>> dw_q;
  std::optional<Conv2dParams<T>> dw_k;
  std::optional<Conv2dParams<T>> dw_v;
  std::vector<LinearParams<T>> fcs;

  std::size_t heads() const { return channels / head_dim; }
};

/// Which of q, k, v the local operator reads.
struct LocalInputs {
  bool q = false;
  bool k = false;
  bool v = false;
};
LocalInputs local_inputs(const LocalConfig& config);

template <typename T>
AttnConvParams<T> make_attnconv(std::size_t channels, std::size_t kernel, std::size_t head_dim,
                                const LocalConfig& config, Rng& rng);

/// Sets the padding mode of every depth-wise conv in `p`.
template <typename T>
void set_pad_mode(AttnConvParams<T>& p, PadMode mode);

/// outer(t / sqrt(d)) with t = gate(dw_q(q) ⊙ dw_k(k)); q alone when use_k
/// is false. Under the default tanh every output lies in (-1, 1).
template <typename T>
BasicTensor<T> gen_context_weights(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                   const AttnConvParams<T>& p);

/// gen_context_weights(q, k) ⊙ dw_v(v).
template <typename T>
BasicTensor<T> attnconv_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                const BasicTensor<T>& v, const AttnConvParams<T>& p);

/// Intermediate tensors of a local-branch evaluation.
template <typename T>
struct LocalTaps {
  BasicTensor<T> shared;  // dw_v(v) when the kind has one
  BasicTensor<T> output;
};

template <typename T>
using LocalOperator =
    std::function<BasicTensor<T>(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                 const BasicTensor<T>& v, const AttnConvParams<T>& p,
                                 LocalTaps<T>* taps)>;

/// Operator for one local-perception design. kNone is an ArgumentError.
template <typename T>
LocalOperator<T> build_local_ablation(LocalKind kind);

/// Dispatches on p.config.kind. Undefined q/k are allowed when the kind does
/// not read them.
template <typename T>
BasicTensor<T> local_branch_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                    const BasicTensor<T>& v, const AttnConvParams<T>& p,
                                    LocalTaps<T>* taps = nullptr);

}  // namespace clo
