// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "cloformer/cloformer.hpp"

namespace {

void BM_DwConv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  clo::Rng rng(1);
  const auto p = clo::make_dwconv<float>(c, 3, 1, true, rng, 0.1);
  const clo::Tensor x = clo::normal<float>(clo::Shape{1, c, hw, hw}, rng);
  clo::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(clo::dwconv2d(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * hw * hw * 9));
}
BENCHMARK(BM_DwConv3x3)->Args({32, 56})->Args({64, 28})->Args({128, 14});

void BM_PointwiseFc(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  clo::Rng rng(2);
  const auto p = clo::make_linear<float>(c, 3 * c, true, rng, 0.1);
  const clo::Tensor x = clo::normal<float>(clo::Shape{1, c, hw, hw}, rng);
  clo::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(clo::fully_connected(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(3 * c * c * hw * hw));
}
BENCHMARK(BM_PointwiseFc)->Args({32, 56})->Args({64, 28})->Args({128, 14});

void BM_GlobalBranch(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const auto stride = static_cast<std::size_t>(state.range(1));
  clo::Rng rng(3);
  const clo::Shape s{1, 16, hw, hw};
  const clo::Tensor q = clo::normal<float>(s, rng);
  const clo::Tensor k = clo::normal<float>(s, rng);
  const clo::Tensor v = clo::normal<float>(s, rng);
  clo::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(clo::global_branch_forward(q, k, v, stride, 2));
}
BENCHMARK(BM_GlobalBranch)->Args({56, 8})->Args({28, 4})->Args({14, 2})->Args({14, 1});

void BM_AttnConv(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  clo::Rng rng(4);
  const auto p = clo::make_attnconv<float>(24, 3, 6, clo::LocalConfig{}, rng);
  const clo::Shape s{1, 24, hw, hw};
  const clo::Tensor q = clo::normal<float>(s, rng);
  const clo::Tensor k = clo::normal<float>(s, rng);
  const clo::Tensor v = clo::normal<float>(s, rng);
  clo::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(clo::attnconv_forward(q, k, v, p));
}
BENCHMARK(BM_AttnConv)->Arg(28)->Arg(56);

}  // namespace
