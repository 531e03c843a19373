// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cloformer/layers.hpp"

namespace clo {

/// Local-branch operator family (the five local-perception designs plus
/// "none" for the global-only model).
enum class LocalKind {
  kNone,
  kSharedOnly,
  kContextOnly,
  kWindowAttn,
  kWindowAttnPlusShared,
  kFull,
};

enum class StemKind { kConv, kPatchEmbed };

/// Downsampler on the skip path of the cross-stage ConvFFN.
enum class SkipConv { kDense, kDepthwise };

LocalKind parse_local_kind(std::string_view name);
std::string_view local_kind_name(LocalKind kind);
StemKind parse_stem_kind(std::string_view name);
std::string_view stem_kind_name(StemKind kind);
SkipConv parse_skip_conv(std::string_view name);
std::string_view skip_conv_name(SkipConv kind);

/// Weight initialization. kTruncNormal draws every FC/conv weight from a
/// truncated normal with sigma 0.02; kFanIn rescales the same draw to sigma
/// 1/sqrt(fan_in).
enum class InitScheme { kTruncNormal, kFanIn };

InitScheme parse_init_scheme(std::string_view name);
std::string_view init_scheme_name(InitScheme kind);

/// Configuration of the local branch and of the context-weight generator.
struct LocalConfig {
  LocalKind kind = LocalKind::kFull;
  bool use_k = true;
  bool qk_dwconv = true;
  /// Number of inner activations in the gate. 0 means no gate FCs at all
  /// (outer activation applied straight to Q_l ⊙ K_l); n >= 1 means n + 1
  /// channel-preserving FCs with an activation between consecutive ones.
  int gate_depth = 1;
  Activation inner = Activation::kSwish;
  Activation outer = Activation::kTanh;
  double swish_beta = 1.0;

  bool operator==(const LocalConfig&) const = default;
};

struct StageSpec {
  std::size_t blocks = 2;
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t local_channels = 24;
  std::size_t global_channels = 8;
  std::size_t attn_kernel = 3;
  std::size_t pool_stride = 8;
  std::size_t ffn_ratio = 4;
  std::size_t ffn_kernel = 5;

  std::size_t head_dim() const { return channels / heads; }
  bool operator==(const StageSpec&) const = default;
};

struct VariantSpec {
  std::string name = "custom";
  std::array<StageSpec, 4> stages{};
  std::size_t stem_channels = 16;
  std::size_t num_classes = 1000;
  double drop_path_max = 0.0;
  StemKind stem = StemKind::kConv;
  SkipConv skip = SkipConv::kDense;
  InitScheme init = InitScheme::kTruncNormal;
  LocalConfig local{};

  /// Throws ConfigurationError naming the first offending field.
  void validate() const;
  std::size_t total_blocks() const;

  /// Key-value text, one `key = value` per line, covering every field.
  std::string to_text() const;

  bool operator==(const VariantSpec&) const = default;
};

/// Named presets: "xxs", "xs", "s" (ImageNet configurations) and "xxs64"
/// (XXS topology, halved channels, 8 classes; the desk-scale training model).
VariantSpec preset(std::string_view name);

/// Applies `key = value` lines on top of `base`. Blank lines and `#`
/// comments are ignored; unknown keys are a ConfigurationError.
VariantSpec parse_variant(std::string_view text, const VariantSpec& base = preset("xxs"));

using Knobs = std::map<std::string, std::string>;

/// Parses "k=v,k=v" into knobs.
Knobs parse_knobs(std::string_view text);

/// Applies ablation knobs to a base spec and validates the result.
///
///   branch      both | only_global | only_local
///   local       shared_only | context_only | window_attn |
///               window_attn_plus_shared | full
///   use_k, qk_dwconv                       true | false
///   gate_depth  n  (or extra_pairs n, meaning gate_depth = 1 + n)
///   inner_act, outer_act                   activation names
///   swish_beta  positive real
///   stem        conv | patch_embed
///   ffn_kernel  odd kernel for every ConvFFN
///   skip        dense | depthwise
///   init        trunc_normal | fan_in
///
/// Contradictory combinations (e.g. branch=only_global with a local kind or
/// gate knob) are a ConfigurationError.
VariantSpec build_ablation(const VariantSpec& base, const Knobs& knobs);

struct AblationRow {
  std::string table;
  std::string name;
  Knobs knobs;
};

/// Every ablation configuration the model can be built in, grouped by the
/// comparison it belongs to.
std::vector<AblationRow> ablation_catalog();

}  // namespace clo
