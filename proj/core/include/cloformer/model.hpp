// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cloformer/clo_block.hpp"
#include "cloformer/variant.hpp"

namespace clo {

template <typename T>
struct NormParams {
  BasicTensor<T> gain;
  BasicTensor<T> offset;
};

/// Conv stem: convs[0..4] with norms[0..3] after the 3x3 convs. Patch-embed
/// stem: convs[0] (4x4 stride 4) and norms[0].
template <typename T>
struct StemParams {
  StemKind kind = StemKind::kConv;
  std::vector<Conv2dParams<T>> convs;
  std::vector<NormParams<T>> norms;
};

/// blocks[j] is followed by ffns[j]. In stages 1-3 the last FFN is the
/// cross-stage transition into the next stage's width.
template <typename T>
struct StageParams {
  std::vector<CloBlockParams<T>> blocks;
  std::vector<ConvFFNParams<T>> ffns;
};

template <typename T>
struct NamedParam {
  std::string name;
  BasicTensor<T> tensor;
};

template <typename T>
struct BasicModel {
  VariantSpec spec;
  StemParams<T> stem;
  std::array<StageParams<T>, 4> stages;
  LinearParams<T> head;

  /// Every learnable tensor under a unique dotted name, in a fixed order.
  std::vector<NamedParam<T>> named_parameters() const;
  std::vector<BasicTensor<T>> parameters() const;
};

using Model = BasicModel<float>;
using Model64 = BasicModel<double>;

/// Validates `spec` and draws all weights from `rng` (truncated normal
/// sigma 0.02 for FC/conv weights, zero biases, unit/zero norms).
template <typename T>
BasicModel<T> build_model(const VariantSpec& spec, Rng& rng);

template <typename T>
BasicModel<T> build_model(const VariantSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return build_model<T>(spec, rng);
}

/// Sets the padding mode of every depth-wise conv inside the mixer blocks.
template <typename T>
void set_block_padding(BasicModel<T>& m, PadMode mode);

template <typename T>
BasicTensor<T> conv_stem(const BasicTensor<T>& x, const BasicModel<T>& m);

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;
  bool want_features = false;
  /// 1..4 records the branch taps of that stage's final block; 0 disables.
  int tap_stage = 0;
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> logits;
  /// Stage outputs at H/4, H/8, H/16, H/32 (tensor entering each transition
  /// FFN, and the tensor entering the pooled head for stage 4).
  std::vector<BasicTensor<T>> features;
  BlockTaps<T> taps;
};

/// Non-finite activations raise NumericError naming the stage and block.
template <typename T>
ForwardResult<T> model_forward(const BasicTensor<T>& x, const BasicModel<T>& m,
                               const ForwardOptions& options = {});

template <typename T>
ForwardResult<T> model_forward(const BasicTensor<T>& x, const BasicModel<T>& m,
                               bool want_features) {
  ForwardOptions options;
  options.want_features = want_features;
  return model_forward(x, m, options);
}

}  // namespace clo
