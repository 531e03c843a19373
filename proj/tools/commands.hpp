// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace clo::cli {

/// How a command picks its variant: a preset name, an optional config file
/// applied on top, then optional ablation knobs.
struct SpecSource {
  std::string variant = "xxs";
  std::string config;
  std::string knobs;
  std::size_t classes = 0;  // 0 keeps the variant's class count
};

struct BuildArgs {
  SpecSource spec;
  std::uint64_t seed = 0;
  std::string out;
  bool print_spec = false;
};

struct CostArgs {
  SpecSource spec;
  std::size_t input = 224;
  bool csv = false;
};

struct ForwardArgs {
  std::string ckpt;
  std::string input;
  std::string out;
};

struct GradcheckArgs {
  std::string module = "all";
  double tolerance = 1e-5;
};

struct EquivarianceArgs {
  std::string padding = "circular";
  std::size_t channels = 8;
  std::size_t size = 12;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  SpecSource spec;
  std::size_t steps = 2000;
  std::uint64_t seed = 3;
  std::string out;
  std::size_t samples = 256;
  std::size_t input = 64;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.05;
  double target = 2.0;
  std::size_t eval_every = 40;
  std::uint64_t data_seed = 7;
};

struct SpectrumArgs {
  std::string ckpt;
  int stage = 2;
  std::string out;
  std::size_t input = 256;
  std::size_t samples = 8;
  std::size_t bands = 8;
  std::uint64_t data_seed = 8;
};

struct AblateArgs {
  SpecSource spec;
  bool list = false;
  std::size_t input = 64;
};

int run_build(const BuildArgs& a, std::ostream& out);
int run_cost(const CostArgs& a, std::ostream& out);
int run_forward(const ForwardArgs& a, std::ostream& out);
int run_gradcheck(const GradcheckArgs& a, std::ostream& out);
int run_equivariance(const EquivarianceArgs& a, std::ostream& out);
int run_train(const TrainArgs& a, std::ostream& out);
int run_spectrum(const SpectrumArgs& a, std::ostream& out);
int run_ablate(const AblateArgs& a, std::ostream& out);

}  // namespace clo::cli
