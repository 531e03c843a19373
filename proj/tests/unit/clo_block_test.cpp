// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace {

using clo::Shape;
using clo::Tensor;
using clo::Tensor64;
using testing_support::dims_of;
using testing_support::max_diff;
using testing_support::to_vec;

TEST(StageSplit, FirstStageOfXxs) {
  const auto s = clo::preset("xxs").stages[0];
  EXPECT_EQ(s.local_channels, 24u);
  EXPECT_EQ(s.global_channels, 8u);
  EXPECT_EQ(s.head_dim(), 8u);
  EXPECT_EQ(s.local_channels / s.head_dim(), 3u);
  EXPECT_EQ(s.global_channels / s.head_dim(), 1u);
}

TEST(StageSplit, EveryPresetStagePartitionsIntoHeads) {
  for (const char* name : {"xxs", "xs", "s"}) {
    for (const auto& s : clo::preset(name).stages) {
      EXPECT_EQ(s.local_channels + s.global_channels, s.channels) << name;
      EXPECT_EQ(s.channels % s.heads, 0u) << name;
      EXPECT_EQ(s.local_channels % s.head_dim(), 0u) << name;
      EXPECT_EQ(s.global_channels % s.head_dim(), 0u) << name;
      EXPECT_GT(s.global_channels, 0u) << name;
    }
  }
}

TEST(GlobalBranch, StrideOneIsVanillaAttention) {
  clo::Rng rng(1);
  const Tensor64 q = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const auto ref = oracle::attention(to_vec(q), dims_of(q), to_vec(k), to_vec(v), dims_of(k), 2);
  EXPECT_LT(max_diff(clo::global_branch_forward(q, k, v, 1, 2), ref), 1e-12);
}

TEST(GlobalBranch, FullExtentPoolingBroadcastsPooledValue) {
  clo::Rng rng(2);
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 4, 4}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 4, 4, 4}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 4, 4, 4}, rng);
  const Tensor64 y = clo::global_branch_forward(q, k, v, 4, 2);
  const Tensor64 pooled = clo::global_avg_pool(v);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 16; ++i)
      EXPECT_NEAR(y.at(0, c, i / 4, i % 4), pooled.data()[c], 1e-12);
}

TEST(GlobalBranch, MatchesMatrixOracle) {
  clo::Rng rng(3);
  const Tensor64 q = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const auto ref = oracle::global_branch(to_vec(q), to_vec(k), to_vec(v), dims_of(q), 2, 2);
  EXPECT_LT(max_diff(clo::global_branch_forward(q, k, v, 2, 2), ref), 1e-12);
  EXPECT_THROW(clo::global_branch_forward(q, k, v, 3, 2), clo::DimensionError);
}

TEST(Softmax, AttentionRowsSumToOne) {
  clo::Rng rng(4);
  const Tensor64 scores = clo::normal<double>(Shape{2, 3, 16, 9}, rng, 0.0, 20.0);
  const Tensor64 p = clo::softmax_tokens(scores);
  for (std::size_t r = 0; r < p.numel() / 9; ++r) {
    double total = 0;
    for (std::size_t j = 0; j < 9; ++j) total += p.data()[r * 9 + j];
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(CloBlock, PreservesShapeForEveryXxsStage) {
  clo::Rng rng(5);
  const auto spec = clo::preset("xxs");
  const std::size_t extents[4] = {16, 8, 4, 2};
  for (std::size_t s = 0; s < 4; ++s) {
    auto stage = spec.stages[s];
    stage.pool_stride = std::min(stage.pool_stride, extents[s]);
    const auto p = clo::make_clo_block<float>(stage, spec.local, 0.0, rng);
    const Tensor x = clo::normal<float>(Shape{1, stage.channels, extents[s], extents[s]}, rng);
    EXPECT_EQ(clo::clo_block_forward(x, p).shape(), x.shape());
  }
}

TEST(CloBlock, ZeroFusionIsIdentity) {
  clo::Rng rng(6);
  auto p = clo::make_clo_block<float>(clo::preset("xxs").stages[1], clo::LocalConfig{}, 0.0, rng);
  p.fuse.weight = Tensor::zeros(p.fuse.weight.shape());
  p.fuse.bias = Tensor::zeros(p.fuse.bias.shape());
  const Tensor x = clo::normal<float>(Shape{2, 64, 8, 8}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::clo_block_forward(x, p), x), 0.0f);
}

TEST(CloBlock, PassThroughWiring) {
  // local: shared-only with a delta kernel; global: one pooled token;
  // qkv routes the normalized input into both value slices; fuse = I.
  clo::StageSpec st;
  st.blocks = 1;
  st.channels = 8;
  st.heads = 4;
  st.local_channels = 4;
  st.global_channels = 4;
  st.attn_kernel = 3;
  st.pool_stride = 4;
  clo::LocalConfig cfg;
  cfg.kind = clo::LocalKind::kSharedOnly;
  clo::Rng rng(7);
  auto p = clo::make_clo_block<double>(st, cfg, 0.0, rng);
  ASSERT_EQ(p.qkv_width(), 4u * 3 + 4u);  // q_g, k_g, v_l, v_g

  auto dw = p.local->dw_v->weight.mutable_data();
  std::fill(dw.begin(), dw.end(), 0.0);
  for (std::size_t c = 0; c < 4; ++c) dw[c * 9 + 4] = 1.0;
  auto qkv = p.qkv.weight.mutable_data();
  std::fill(qkv.begin(), qkv.end(), 0.0);
  for (std::size_t c = 0; c < 8; ++c) qkv[(8 + c) * 8 + c] = 1.0;  // rows 8..15: v_l | v_g
  for (std::size_t i = 0; i < 8; ++i) qkv[i * 8 + i] = 0.3;         // q_g, k_g: arbitrary
  auto fuse = p.fuse.weight.mutable_data();
  std::fill(fuse.begin(), fuse.end(), 0.0);
  for (std::size_t c = 0; c < 8; ++c) fuse[c * 8 + c] = 1.0;

  const Tensor64 x = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 y = clo::clo_block_forward(x, p);

  std::vector<double> h(x.numel());
  for (std::size_t i = 0; i < 16; ++i) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 8; ++c) mean += x.data()[c * 16 + i] / 8;
    for (std::size_t c = 0; c < 8; ++c) var += std::pow(x.data()[c * 16 + i] - mean, 2) / 8;
    for (std::size_t c = 0; c < 8; ++c) h[c * 16 + i] = (x.data()[c * 16 + i] - mean) / std::sqrt(var + 1e-6);
  }
  for (std::size_t c = 0; c < 8; ++c) {
    double pooled = 0;
    for (std::size_t i = 0; i < 16; ++i) pooled += h[c * 16 + i] / 16;
    for (std::size_t i = 0; i < 16; ++i) {
      const double branch = c < 4 ? h[c * 16 + i] : pooled;
      EXPECT_NEAR(y.data()[c * 16 + i], x.data()[c * 16 + i] + branch, 1e-9);
    }
  }
}

TEST(ConvFfn, InStageShapeAndZeroOutputIdentity) {
  clo::Rng rng(8);
  auto p = clo::make_convffn<float>(32, 0, 4, 5, clo::SkipConv::kDense, 0.0, rng);
  const Tensor x = clo::normal<float>(Shape{2, 32, 8, 8}, rng);
  EXPECT_EQ(clo::convffn_forward(x, p).shape(), x.shape());
  p.fc_out.weight = Tensor::zeros(p.fc_out.weight.shape());
  EXPECT_EQ(clo::max_abs_diff(clo::convffn_forward(x, p, clo::FfnVariant::kInStage), x), 0.0f);
  EXPECT_THROW(clo::convffn_forward(x, p, clo::FfnVariant::kCrossStage), clo::ArgumentError);
}

TEST(ConvFfn, CrossStageHalvesAndWidens) {
  clo::Rng rng(9);
  for (auto skip : {clo::SkipConv::kDense, clo::SkipConv::kDepthwise}) {
    const auto p = clo::make_convffn<float>(32, 64, 4, 5, skip, 0.0, rng);
    const Tensor x = clo::normal<float>(Shape{1, 32, 56, 56}, rng);
    EXPECT_EQ(clo::convffn_forward(x, p, clo::FfnVariant::kCrossStage).shape(),
              (Shape{1, 64, 28, 28}));
    EXPECT_THROW(clo::convffn_forward(Tensor(Shape{1, 32, 7, 8}), p), clo::DimensionError);
  }
}

TEST(ConvFfn, SkipPathIsConvThenFc) {
  clo::Rng rng(10);
  auto p = clo::make_convffn<double>(4, 8, 2, 3, clo::SkipConv::kDepthwise, 0.0, rng);
  p.fc_out.weight = Tensor64::zeros(p.fc_out.weight.shape());
  testing_support::redraw(p.skip_conv->weight, rng);
  testing_support::redraw(p.skip_fc->weight, rng);
  const Tensor64 x = clo::normal<double>(Shape{1, 4, 6, 6}, rng);
  oracle::Dims down_dims{};
  const auto down = oracle::conv(to_vec(x), dims_of(x), to_vec(p.skip_conv->weight), {}, 4, 3, 2, 1,
                                 4, false, &down_dims);
  const auto ref = oracle::fc(down, down_dims, to_vec(p.skip_fc->weight), {}, 8);
  EXPECT_LT(max_diff(clo::convffn_forward(x, p), ref), 1e-12);
}

}  // namespace
