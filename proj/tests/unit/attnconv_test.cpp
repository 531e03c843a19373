// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace {

using clo::LocalKind;
using clo::Shape;
using clo::Tensor64;
using testing_support::to_vec;

void set_delta(clo::Conv2dParams<double>& p) {
  auto w = p.weight.mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  const std::size_t k = p.kernel();
  for (std::size_t c = 0; c < p.out_channels(); ++c) w[c * k * k + (k * k) / 2] = 1.0;
  if (p.bias.defined()) std::fill(p.bias.mutable_data().begin(), p.bias.mutable_data().end(), 0.0);
}

void set_identity(clo::LinearParams<double>& p) {
  auto w = p.weight.mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < p.out_features(); ++i) w[i * p.in_features() + i] = 1.0;
  std::fill(p.bias.mutable_data().begin(), p.bias.mutable_data().end(), 0.0);
}

clo::AttnConvParams<double> random_attnconv(std::size_t c, std::size_t k, std::size_t d,
                                            clo::LocalConfig cfg, clo::Rng& rng) {
  auto p = clo::make_attnconv<double>(c, k, d, cfg, rng);
  for (auto* dw : {&p.dw_q, &p.dw_k, &p.dw_v}) {
    if (!*dw) continue;
    testing_support::redraw((*dw)->weight, rng);
    testing_support::redraw((*dw)->bias, rng, 0.1);
  }
  for (auto& fc : p.fcs) {
    testing_support::redraw(fc.weight, rng);
    testing_support::redraw(fc.bias, rng, 0.1);
  }
  return p;
}

TEST(ContextWeights, ZeroInputsGiveZeroWeights) {
  clo::Rng rng(1);
  auto p = clo::make_attnconv<double>(8, 3, 4, clo::LocalConfig{}, rng);
  const Tensor64 z(Shape{1, 8, 4, 4});
  for (double v : testing_support::to_vec(clo::gen_context_weights(z, z, p))) EXPECT_EQ(v, 0.0);
}

TEST(ContextWeights, MatchesStraightLineOracle) {
  clo::Rng rng(2);
  const auto p = random_attnconv(8, 3, 4, clo::LocalConfig{}, rng);
  const Tensor64 q = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 8, 4, 4}, rng);
  const oracle::GateWeights g{3,
                              to_vec(p.dw_q->weight),
                              to_vec(p.dw_q->bias),
                              to_vec(p.dw_k->weight),
                              to_vec(p.dw_k->bias),
                              to_vec(p.fcs[0].weight),
                              to_vec(p.fcs[0].bias),
                              to_vec(p.fcs[1].weight),
                              to_vec(p.fcs[1].bias),
                              4.0};
  const auto ref = oracle::context_weights(to_vec(q), to_vec(k), testing_support::dims_of(q), g);
  EXPECT_LT(testing_support::max_diff(clo::gen_context_weights(q, k, p), ref), 1e-12);
}

TEST(ContextWeights, StrictlyInsideUnitInterval) {
  clo::Rng rng(3);
  const auto p = random_attnconv(4, 3, 2, clo::LocalConfig{}, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor64 q = clo::normal<double>(Shape{1, 4, 5, 5}, rng, 0.0, 3.0);
    const Tensor64 k = clo::normal<double>(Shape{1, 4, 5, 5}, rng, 0.0, 3.0);
    for (double v : testing_support::to_vec(clo::gen_context_weights(q, k, p))) EXPECT_LT(std::abs(v), 1.0);
  }
}

TEST(ContextWeights, IgnoresKWithoutUseK) {
  clo::Rng rng(4);
  clo::LocalConfig cfg;
  cfg.use_k = false;
  const auto p = random_attnconv(4, 3, 2, cfg, rng);
  EXPECT_FALSE(p.dw_k.has_value());
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  const Tensor64 k1 = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  const Tensor64 k2 = clo::normal<double>(Shape{1, 4, 3, 3}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::gen_context_weights(q, k1, p), clo::gen_context_weights(q, k2, p)),
            0.0);
}

TEST(ContextWeights, ShapeMismatchIsDimensionError) {
  clo::Rng rng(5);
  const auto p = clo::make_attnconv<double>(4, 3, 2, clo::LocalConfig{}, rng);
  EXPECT_THROW(clo::gen_context_weights(Tensor64(Shape{1, 4, 5, 5}), Tensor64(Shape{1, 4, 4, 5}), p),
               clo::DimensionError);
}

TEST(AttnConv, ZeroValuesAnnihilate) {
  clo::Rng rng(6);
  const auto p = random_attnconv(4, 3, 2, clo::LocalConfig{}, rng);
  auto zero_bias = p;
  zero_bias.dw_v->bias = Tensor64(zero_bias.dw_v->bias.shape());
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  for (double v : testing_support::to_vec(clo::attnconv_forward(q, q, Tensor64(q.shape()), zero_bias))) EXPECT_EQ(v, 0.0);
}

TEST(AttnConv, IdentityParametersReduceToClosedForm) {
  clo::Rng rng(7);
  clo::LocalConfig cfg;
  cfg.inner = clo::Activation::kIdentity;
  auto p = clo::make_attnconv<double>(8, 5, 4, cfg, rng);
  set_delta(*p.dw_q);
  set_delta(*p.dw_k);
  set_delta(*p.dw_v);
  for (auto& fc : p.fcs) set_identity(fc);
  const Tensor64 q = clo::normal<double>(Shape{2, 8, 6, 6}, rng);
  const Tensor64 k = clo::normal<double>(Shape{2, 8, 6, 6}, rng);
  const Tensor64 v = clo::normal<double>(Shape{2, 8, 6, 6}, rng);
  const Tensor64 y = clo::attnconv_forward(q, k, v, p);
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double expected = std::tanh(q.data()[i] * k.data()[i] / 2.0) * v.data()[i];
    EXPECT_NEAR(y.data()[i], expected, 1e-12);
  }
}

TEST(AttnConv, CircularShiftEquivariance) {
  clo::Rng rng(8);
  auto p = random_attnconv(8, 3, 4, clo::LocalConfig{}, rng);
  clo::set_pad_mode(p, clo::PadMode::kCircular);
  const Tensor64 q = clo::normal<double>(Shape{1, 8, 12, 12}, rng);
  const Tensor64 k = clo::normal<double>(Shape{1, 8, 12, 12}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 8, 12, 12}, rng);
  const Tensor64 y = clo::attnconv_forward(q, k, v, p);
  const Tensor64 ys = clo::attnconv_forward(clo::roll_spatial(q, 2, 3), clo::roll_spatial(k, 2, 3),
                                            clo::roll_spatial(v, 2, 3), p);
  EXPECT_LT(clo::max_abs_diff(ys, clo::roll_spatial(y, 2, 3)), 1e-12);
}

TEST(LocalAblation, AllKindsKeepTheShape) {
  clo::Rng rng(9);
  const Tensor64 x = clo::normal<double>(Shape{1, 8, 8, 8}, rng);
  for (auto kind : {LocalKind::kSharedOnly, LocalKind::kContextOnly, LocalKind::kWindowAttn,
                    LocalKind::kWindowAttnPlusShared, LocalKind::kFull}) {
    clo::LocalConfig cfg;
    cfg.kind = kind;
    const auto p = clo::make_attnconv<double>(8, 3, 4, cfg, rng);
    clo::LocalTaps<double> taps;
    const Tensor64 y = clo::local_branch_forward(x, x, x, p, &taps);
    EXPECT_EQ(y.shape(), x.shape()) << clo::local_kind_name(kind);
    EXPECT_EQ(taps.output.identity(), y.identity());
  }
  EXPECT_THROW(clo::build_local_ablation<double>(LocalKind::kNone), clo::ArgumentError);
}

TEST(LocalAblation, SharedOnlyWithDeltaKernelIsIdentity) {
  clo::Rng rng(10);
  clo::LocalConfig cfg;
  cfg.kind = LocalKind::kSharedOnly;
  auto p = clo::make_attnconv<double>(4, 3, 2, cfg, rng);
  set_delta(*p.dw_v);
  const Tensor64 v = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::local_branch_forward(v, v, v, p), v), 0.0);
}

TEST(LocalAblation, WindowOfOneIsIdentity) {
  clo::Rng rng(11);
  clo::LocalConfig cfg;
  cfg.kind = LocalKind::kWindowAttn;
  const auto p = clo::make_attnconv<double>(4, 1, 2, cfg, rng);
  const Tensor64 q = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  const Tensor64 v = clo::normal<double>(Shape{1, 4, 5, 5}, rng);
  EXPECT_LT(clo::max_abs_diff(clo::local_branch_forward(q, q, v, p), v), 1e-12);
}

TEST(LocalAblation, ParameterSetsFollowTheKind) {
  clo::Rng rng(12);
  auto count = [&](clo::LocalConfig cfg) {
    const auto p = clo::make_attnconv<double>(8, 3, 4, cfg, rng);
    std::size_t n = 0;
    for (const auto* dw : {&p.dw_q, &p.dw_k, &p.dw_v})
      if (*dw) n += (*dw)->weight.numel() + (*dw)->bias.numel();
    for (const auto& fc : p.fcs) n += fc.weight.numel() + fc.bias.numel();
    return n;
  };
  clo::LocalConfig full;
  clo::LocalConfig shared = full;
  shared.kind = LocalKind::kSharedOnly;
  clo::LocalConfig no_k = full;
  no_k.use_k = false;
  clo::LocalConfig deeper = full;
  deeper.gate_depth = 2;
  EXPECT_EQ(count(full), 3u * (8 * 9 + 8) + 2u * (64 + 8));
  EXPECT_EQ(count(shared), 8u * 9 + 8);
  EXPECT_EQ(count(full) - count(no_k), 8u * 9 + 8);
  EXPECT_EQ(count(deeper) - count(full), 64u + 8);
}

}  // namespace
