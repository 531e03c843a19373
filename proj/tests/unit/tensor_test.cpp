// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdint>
#include <sstream>

#include "support.hpp"

namespace {

using clo::Shape;
using clo::Tensor;
using clo::Tensor64;

TEST(Shape, RejectsZeroExtentAndHighRank) {
  EXPECT_THROW((Shape{2, 0}), clo::DimensionError);
  EXPECT_THROW((Shape{1, 1, 1, 1, 1}), clo::DimensionError);
  EXPECT_EQ((Shape{2, 3}).numel(), 6u);
  EXPECT_TRUE((Shape{2, 3}).same_extents(Shape{2, 3, 1, 1}));
}

TEST(Storage, SixtyFourByteAligned) {
  auto aligned = [](const auto* p) { return reinterpret_cast<std::uintptr_t>(p) % 64 == 0; };
  for (std::size_t n : {1u, 3u, 17u, 1000u}) {
    Tensor x = Tensor::full(Shape{n}, 1.0f);
    x.set_requires_grad(true);
    const Tensor y = clo::hadamard(x, x);
    EXPECT_TRUE(aligned(x.data().data()));
    EXPECT_TRUE(aligned(y.data().data()));
    clo::sum(y).backward();
    const Tensor g = x.grad();
    EXPECT_TRUE(aligned(g.data().data()));
  }
}

TEST(Hadamard, ScalarArithmetic) {
  const Tensor a(Shape{2}, {1, 2});
  const Tensor b(Shape{2}, {3, 4});
  const Tensor c = clo::hadamard(a, b);
  EXPECT_EQ(c.data()[0], 3.0f);
  EXPECT_EQ(c.data()[1], 8.0f);
}

TEST(Hadamard, ZeroAnnihilates) {
  clo::Rng rng(1);
  const Tensor a = clo::normal<float>(Shape{2, 3, 4, 4}, rng);
  const Tensor z = Tensor::zeros(a.shape());
  const Tensor c = clo::hadamard(a, z);
  for (float v : c.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Hadamard, MismatchNamesBothShapes) {
  try {
    clo::hadamard(Tensor(Shape{2, 3}), Tensor(Shape{3, 2}));
    FAIL();
  } catch (const clo::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2,3)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(3,2)"), std::string::npos) << msg;
  }
}

TEST(ConcatChannels, AddsExtents) {
  const Tensor a(Shape{1, 2, 2, 2});
  const Tensor b(Shape{1, 3, 2, 2});
  EXPECT_EQ(clo::concat_channels(a, b).shape(), (Shape{1, 5, 2, 2}));
  EXPECT_THROW(clo::concat_channels(a, Tensor(Shape{1, 3, 2, 3})), clo::DimensionError);
  EXPECT_THROW(clo::concat_channels(a, Tensor(Shape{2, 3, 2, 2})), clo::DimensionError);
}

TEST(SplitChannels, LocalGlobalSplitOfFirstStage) {
  clo::Rng rng(2);
  const Tensor x = clo::normal<float>(Shape{1, 32, 4, 4}, rng);
  const auto [local, global] = clo::split_channels(x, 24);
  EXPECT_EQ(local.shape().c(), 24u);
  EXPECT_EQ(global.shape().c(), 8u);
  EXPECT_EQ(clo::max_abs_diff(clo::concat_channels(local, global), x), 0.0f);
  EXPECT_THROW(clo::split_channels(x, 0), clo::ArgumentError);
  EXPECT_THROW(clo::split_channels(x, 32), clo::ArgumentError);
}

TEST(FiniteDiff, QuadraticGradient) {
  const Tensor64 x(Shape{2}, {1, 2});
  const Tensor64 g = clo::finite_diff_grad(
      [](const Tensor64& t) { return t.data()[0] * t.data()[0] + t.data()[1] * t.data()[1]; }, x,
      1e-4);
  EXPECT_NEAR(g.data()[0], 2.0, 1e-6);
  EXPECT_NEAR(g.data()[1], 4.0, 1e-6);
}

TEST(FiniteDiff, ConstantHasZeroGradient) {
  const Tensor64 x(Shape{3}, {1, 2, 3});
  const Tensor64 g = clo::finite_diff_grad([](const Tensor64&) { return 5.0; }, x);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, NonFiniteIsNumericError) {
  const Tensor64 x(Shape{1}, {0.0});
  EXPECT_THROW(clo::finite_diff_grad([](const Tensor64& t) { return 1.0 / (t.data()[0] * 0.0); }, x),
               clo::NumericError);
}

TEST(Autodiff, SharedInputAccumulates) {
  Tensor64 x(Shape{3}, {1, 2, 3});
  x.set_requires_grad(true);
  // y = sum(x * x + x)
  clo::sum(clo::add(clo::hadamard(x, x), x)).backward();
  const Tensor64 grad = x.grad();
  const auto g = grad.data();
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 5.0);
  EXPECT_DOUBLE_EQ(g[2], 7.0);
}

TEST(Autodiff, NoGradGuardRecordsNothing) {
  Tensor64 x(Shape{2}, {1, 2});
  x.set_requires_grad(true);
  Tensor64 y;
  {
    clo::NoGradGuard guard;
    y = clo::hadamard(x, x);
  }
  EXPECT_TRUE(y.is_leaf());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autodiff, MutatingNonLeafIsRejected) {
  Tensor64 x(Shape{2}, {1, 2});
  x.set_requires_grad(true);
  Tensor64 y = clo::scale(x, 2.0);
  EXPECT_THROW(y.mutable_data(), clo::ArgumentError);
}

TEST(Autodiff, DeepChainDoesNotOverflowStack) {
  Tensor64 x(Shape{1}, {1.0});
  x.set_requires_grad(true);
  Tensor64 y = x;
  for (int i = 0; i < 20000; ++i) y = clo::scale(y, 1.0);
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad().item(), 1.0);
}

TEST(Ops, RollSpatialWraps) {
  const Tensor x(Shape{1, 1, 2, 3}, {0, 1, 2, 3, 4, 5});
  const Tensor r = clo::roll_spatial(x, 1, 1);
  const std::vector<float> expected = {5, 3, 4, 2, 0, 1};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(r.data()[i], expected[i]);
  EXPECT_EQ(clo::max_abs_diff(clo::roll_spatial(r, -1, -1), x), 0.0f);
}

TEST(Ops, GradientsMatchFiniteDifferences) {
  clo::Rng rng(3);
  const Tensor64 b = clo::normal<double>(Shape{2, 5, 3, 3}, rng);
  const Tensor64 x = clo::normal<double>(Shape{2, 5, 3, 3}, rng);
  using testing_support::grad_error;
  EXPECT_LT(grad_error([&] { return clo::add(x, b); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::sub(b, x); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::hadamard(x, b); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::hadamard(x, x); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::scale(x, 0.3); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::concat_channels(x, b); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::concat_channels(b, x); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::slice_channels(x, 1, 4); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::split_channels(x, 2).second; }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::roll_spatial(x, 2, -1); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return clo::mean(clo::hadamard(x, x)); }, x), 1e-5);
  EXPECT_LT(grad_error([&] { return x.reshape(Shape{10, 9}); }, x), 1e-5);
  const std::vector<double> factors = {0.5, 2.0};
  EXPECT_LT(grad_error([&] { return clo::scale_samples(x, std::span<const double>(factors)); }, x),
            1e-5);
}

TEST(Clot, RoundTripBothPrecisions) {
  clo::Rng rng(4);
  const Tensor a = clo::normal<float>(Shape{2, 3, 4, 5}, rng);
  const Tensor64 b = clo::normal<double>(Shape{7}, rng);
  std::stringstream buf;
  clo::clot::write(buf, a);
  clo::clot::write(buf, b);
  const auto ra = std::get<Tensor>(clo::clot::read(buf));
  const auto rb = std::get<Tensor64>(clo::clot::read(buf));
  EXPECT_EQ(ra.shape(), a.shape());
  EXPECT_EQ(clo::max_abs_diff(ra, a), 0.0f);
  EXPECT_EQ(clo::max_abs_diff(rb, b), 0.0);
}

TEST(Clot, TruncatedAndBadMagicAreFormatErrors) {
  std::stringstream buf;
  clo::clot::write(buf, Tensor(Shape{4, 4}));
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(clo::clot::read(cut), clo::FormatError);
  std::stringstream bad("XXXX" + bytes.substr(4));
  EXPECT_THROW(clo::clot::read(bad), clo::FormatError);
}

}  // namespace
