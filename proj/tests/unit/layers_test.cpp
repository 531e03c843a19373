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

TEST(FullyConnected, SingleUnitExample) {
  clo::LinearParams<float> p{Tensor(Shape{1, 2}, {1, 2}), Tensor(Shape{1}, {0.5f})};
  const Tensor x(Shape{1, 2, 1, 1}, {3, 4});
  EXPECT_FLOAT_EQ(clo::fully_connected(x, p).item(), 11.5f);
}

TEST(FullyConnected, RejectsWidthMismatch) {
  clo::Rng rng(1);
  const auto p = clo::make_linear<float>(4, 2, true, rng);
  EXPECT_THROW(clo::fully_connected(Tensor(Shape{1, 3, 2, 2}), p), clo::DimensionError);
}

TEST(DepthwiseConv, DeltaKernelIsIdentity) {
  clo::Rng rng(2);
  auto p = clo::make_dwconv<float>(3, 5, 1, true, rng);
  std::fill(p.weight.mutable_data().begin(), p.weight.mutable_data().end(), 0.0f);
  for (std::size_t c = 0; c < 3; ++c) p.weight.mutable_data()[c * 25 + 12] = 1.0f;
  const Tensor x = clo::normal<float>(Shape{2, 3, 6, 7}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::dwconv2d(x, p), x), 0.0f);
}

TEST(DepthwiseConv, OnesKernelSumsNeighbourhood) {
  clo::Rng rng(3);
  auto p = clo::make_dwconv<float>(1, 3, 1, false, rng);
  std::fill(p.weight.mutable_data().begin(), p.weight.mutable_data().end(), 1.0f);
  const Tensor x = Tensor::full(Shape{1, 1, 4, 4}, 1.0f);
  const Tensor y = clo::dwconv2d(x, p);
  EXPECT_FLOAT_EQ(y.at(0, 0, 0, 0), 4.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 0, 1), 6.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 1, 1), 9.0f);
}

TEST(DepthwiseConv, EvenKernelRejected) {
  clo::Rng rng(4);
  EXPECT_THROW(clo::make_dwconv<float>(2, 4, 1, true, rng), clo::ArgumentError);
}

TEST(DepthwiseConv, MatchesNaiveLoopsBothPaddings) {
  clo::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 * testing_support::pick(rng, 0, 3) + 1;
    const std::size_t stride = testing_support::pick(rng, 1, 2);
    const std::size_t c = testing_support::pick(rng, 1, 5);
    auto p = clo::make_dwconv<double>(c, k, stride, true, rng, 1.0);
    p.bias = clo::normal<double>(p.bias.shape(), rng);
    p.pad_mode = trial % 2 ? clo::PadMode::kCircular : clo::PadMode::kZero;
    const Tensor64 x = clo::normal<double>(
        Shape{2, c, testing_support::pick(rng, k, 9), testing_support::pick(rng, k, 9)}, rng);
    const auto ref = oracle::conv(to_vec(x), dims_of(x), to_vec(p.weight), to_vec(p.bias), c, k,
                                  stride, (k - 1) / 2, c, trial % 2 == 1);
    EXPECT_LT(max_diff(clo::dwconv2d(x, p), ref), 1e-10);
  }
}

TEST(Conv2d, MatchesNaiveLoops) {
  clo::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = testing_support::pick(rng, 1, 4);
    const std::size_t stride = testing_support::pick(rng, 1, 3);
    const std::size_t pad = k % 2 == 0 ? 0 : testing_support::pick(rng, 0, k - 1);
    const std::size_t cin = testing_support::pick(rng, 1, 4);
    const std::size_t cout = testing_support::pick(rng, 1, 4);
    auto p = clo::make_conv<double>(cin, cout, k, stride, pad, true, rng, 1.0);
    p.bias = clo::normal<double>(p.bias.shape(), rng);
    const Tensor64 x = clo::normal<double>(Shape{2, cin, 8, 7}, rng);
    const auto ref = oracle::conv(to_vec(x), dims_of(x), to_vec(p.weight), to_vec(p.bias), cout, k,
                                  stride, pad, 1, false);
    EXPECT_LT(max_diff(clo::conv2d(x, p), ref), 1e-10);
  }
}

TEST(AvgPool, ConstantAndStrideOne) {
  const Tensor x = Tensor::full(Shape{1, 2, 4, 4}, 3.0f);
  for (float v : testing_support::to_vec(clo::avg_pool2d(x, 2))) EXPECT_FLOAT_EQ(v, 3.0f);
  clo::Rng rng(7);
  const Tensor y = clo::normal<float>(Shape{1, 2, 4, 4}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::avg_pool2d(y, 1), y), 0.0f);
  EXPECT_THROW(clo::avg_pool2d(y, 3), clo::DimensionError);
}

TEST(AvgPool, MatchesNaiveLoops) {
  clo::Rng rng(8);
  for (std::size_t s : {1u, 2u, 4u}) {
    const Tensor64 x = clo::normal<double>(Shape{2, 3, 8, 12}, rng);
    EXPECT_LT(max_diff(clo::avg_pool2d(x, s), oracle::avg_pool(to_vec(x), dims_of(x), s)), 1e-12);
  }
}

TEST(SoftmaxTokens, ExamplesAndInvariance) {
  const Tensor64 zeros(Shape{1, 1, 1, 4});
  for (double v : testing_support::to_vec(clo::softmax_tokens(zeros))) EXPECT_DOUBLE_EQ(v, 0.25);
  const Tensor64 big(Shape{1, 1, 1, 2}, {1000, 0});
  const Tensor64 y = clo::softmax_tokens(big);
  EXPECT_NEAR(y.data()[0], 1.0, 1e-12);
  EXPECT_TRUE(clo::all_finite(y));
  clo::Rng rng(9);
  const Tensor64 x = clo::normal<double>(Shape{2, 3, 4, 5}, rng);
  const Tensor64 shifted = clo::add(x, Tensor64::full(x.shape(), 7.5));
  EXPECT_LT(clo::max_abs_diff(clo::softmax_tokens(x), clo::softmax_tokens(shifted)), 1e-12);
  EXPECT_LT(max_diff(clo::softmax_tokens(x), oracle::softmax_rows(to_vec(x), 5)), 1e-12);
}

TEST(Activation, KnownValues) {
  const Tensor64 x(Shape{3}, {-1.0, 0.0, 2.0});
  const auto gelu = testing_support::to_vec(clo::activation(clo::Activation::kGelu, x));
  EXPECT_NEAR(gelu[2], 2.0 * 0.5 * (1 + std::erf(2.0 / std::sqrt(2.0))), 1e-12);
  const auto swish = testing_support::to_vec(clo::activation(clo::Activation::kSwish, x, 2.0));
  EXPECT_NEAR(swish[0], oracle::swish(-1.0, 2.0), 1e-12);
  const auto tanh = testing_support::to_vec(clo::activation(clo::Activation::kTanh, x));
  EXPECT_NEAR(tanh[2], std::tanh(2.0), 1e-12);
  const auto relu = testing_support::to_vec(clo::activation(clo::Activation::kRelu, x));
  EXPECT_EQ(relu[0], 0.0);
  EXPECT_THROW(clo::parse_activation("softsign"), clo::ArgumentError);
}

TEST(LayerNorm, NormalizesEachLocation) {
  clo::Rng rng(10);
  const Tensor64 x = clo::normal<double>(Shape{2, 6, 3, 3}, rng, 4.0, 3.0);
  const Tensor64 y = clo::layer_norm_channels(x, Tensor64::full(Shape{6}, 1.0), Tensor64(Shape{6}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0, sq = 0;
        for (std::size_t c = 0; c < 6; ++c) mean += y.at(n, c, i, j) / 6;
        for (std::size_t c = 0; c < 6; ++c) sq += std::pow(y.at(n, c, i, j) - mean, 2) / 6;
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(sq, 1.0, 1e-5);
      }
}

TEST(DropPath, EvalIsIdentityTrainingKeepsOrZeroesSamples) {
  clo::Rng rng(11);
  const Tensor x = clo::normal<float>(Shape{64, 2, 2, 2}, rng);
  EXPECT_EQ(clo::drop_path(x, 0.5, rng, false).identity(), x.identity());
  const Tensor y = clo::drop_path(x, 0.5, rng, true);
  std::size_t kept = 0;
  for (std::size_t n = 0; n < 64; ++n) {
    const float ratio = y.at(n, 0, 0, 0) / x.at(n, 0, 0, 0);
    EXPECT_TRUE(ratio == 0.0f || std::abs(ratio - 2.0f) < 1e-6f);
    kept += ratio != 0.0f;
  }
  EXPECT_GT(kept, 16u);
  EXPECT_LT(kept, 48u);
  EXPECT_THROW(clo::drop_path(x, 1.0, rng, true), clo::ArgumentError);
}

TEST(Attention, SingleKeyReturnsItsValue) {
  clo::Rng rng(12);
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 3, 3}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 4, 1, 1}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 4, 1, 1}, rng);
  const Tensor64 y = clo::multi_head_attention(q, k, v, 2);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(y.at(0, c, i / 3, i % 3), v.at(0, c, 0, 0), 1e-12);
}

TEST(WindowAttention, SizeOneIsIdentityOnValues) {
  clo::Rng rng(13);
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  EXPECT_LT(clo::max_abs_diff(clo::window_attention(q, q, v, 2, 1), v), 1e-12);
}

TEST(WindowAttention, WholeMapWindowEqualsGlobalAttention) {
  clo::Rng rng(14);
  const Tensor64 q = clo::normal<double>(Shape{2, 4, 4, 4}, rng);
  const Tensor64 k = clo::normal<double>(Shape{2, 4, 4, 4}, rng);
  const Tensor64 v = clo::normal<double>(Shape{2, 4, 4, 4}, rng);
  EXPECT_LT(clo::max_abs_diff(clo::window_attention(q, k, v, 2, 4),
                              clo::multi_head_attention(q, k, v, 2)),
            1e-12);
}

}  // namespace
