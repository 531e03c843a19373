// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>

#include "cloformer/attnconv.hpp"
#include "cloformer/layers.hpp"
#include "cloformer/variant.hpp"

namespace clo {

/// Training-time state threaded through the forward pass.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
};

/// Mixer block. The QKV projection emits, in order,
///   [q_l | q_g | k_l | k_g | v_l | v_g]
/// where the local slices are present only when the local operator reads
/// them (see local_inputs()).
template <typename T>
struct CloBlockParams {
  std::size_t channels = 0;
  std::size_t local_channels = 0;
  std::size_t global_channels = 0;
  std::size_t head_dim = 1;
  std::size_t pool_stride = 1;
  double drop_rate = 0.0;
  BasicTensor<T> norm_gain;
  BasicTensor<T> norm_offset;
  LinearParams<T> qkv;
  std::optional<AttnConvParams<T>> local;
  LinearParams<T> fuse;

  std::size_t global_heads() const { return global_channels / head_dim; }
  LocalInputs local_reads() const {
    return local ? local_inputs(local->config) : LocalInputs{};
  }
  /// Output width of the QKV projection.
  std::size_t qkv_width() const;
};

enum class FfnVariant { kInStage, kCrossStage };

/// norm -> fc_in -> GELU -> dw (stride 1 or 2) -> fc_out, residual. The
/// cross-stage form replaces the identity skip by skip_fc(skip_conv(x)).
template <typename T>
struct ConvFFNParams {
  double drop_rate = 0.0;
  BasicTensor<T> norm_gain;
  BasicTensor<T> norm_offset;
  LinearParams<T> fc_in;
  Conv2dParams<T> dw;
  LinearParams<T> fc_out;
  std::optional<Conv2dParams<T>> skip_conv;
  std::optional<LinearParams<T>> skip_fc;

  FfnVariant variant() const {
    return skip_fc ? FfnVariant::kCrossStage : FfnVariant::kInStage;
  }
};

/// Intermediate tensors of one block, filled on request.
template <typename T>
struct BlockTaps {
  BasicTensor<T> shared;  // dw_v output of the local branch
  BasicTensor<T> local;   // local-branch output
  BasicTensor<T> global;  // global-branch output
};

template <typename T>
CloBlockParams<T> make_clo_block(const StageSpec& stage, const LocalConfig& local, double drop_rate,
                                 Rng& rng);

/// `next_channels` == 0 builds the in-stage form.
template <typename T>
ConvFFNParams<T> make_convffn(std::size_t channels, std::size_t next_channels, std::size_t ratio,
                              std::size_t kernel, SkipConv skip, double drop_rate, Rng& rng);

/// Multi-head attention of q against average-pooled k and v.
template <typename T>
BasicTensor<T> global_branch_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                     const BasicTensor<T>& v, std::size_t stride,
                                     std::size_t heads);

template <typename T>
BasicTensor<T> clo_block_forward(const BasicTensor<T>& x, const CloBlockParams<T>& p,
                                 const ForwardContext& ctx = {}, BlockTaps<T>* taps = nullptr);

template <typename T>
BasicTensor<T> convffn_forward(const BasicTensor<T>& x, const ConvFFNParams<T>& p,
                               const ForwardContext& ctx = {});

/// As above, additionally checking that `p` is of the requested form.
template <typename T>
BasicTensor<T> convffn_forward(const BasicTensor<T>& x, const ConvFFNParams<T>& p,
                               FfnVariant variant, const ForwardContext& ctx = {});

}  // namespace clo
