// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cloformer/model.hpp"

namespace clo {

/// Mean over the batch of -log softmax(logits)[label]. logits is (N, K).
template <typename T>
BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                     std::span<const std::size_t> labels);

/// Linear warmup (base * step / warmup) then half-cosine decay to 0 at
/// `total`.
double cosine_lr(std::size_t step, std::size_t total, double base_lr, std::size_t warmup);

template <typename T>
struct OptimState {
  std::vector<BasicTensor<T>> first;
  std::vector<BasicTensor<T>> second;
  std::size_t step = 0;
  double base_lr = 1e-3;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// 0 disables the schedule (constant base_lr).
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;

  /// Learning rate the next adamw_step will use.
  double current_lr() const;
};

/// Decoupled decay (p -= lr wd p) followed by the bias-corrected Adam
/// update. Moments are allocated on first use.
template <typename T>
void adamw_step(const std::vector<BasicTensor<T>>& params, const std::vector<BasicTensor<T>>& grads,
                OptimState<T>& state);

/// Colored shapes on a noisy background. Class c draws shape c % 4 (disc,
/// square, triangle, cross) in color bucket c / 4 (red, green, blue,
/// yellow); at most 16 classes. Sample i has label i % classes.
struct SynthDataset {
  Tensor images;  // (N, 3, H, W), values in [0, 1]
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxSynthClasses = 16;

SynthDataset gen_synth_dataset(std::size_t n, std::size_t classes, std::size_t hw,
                               std::uint64_t seed);

/// Gathers samples [indices] into a batch tensor.
Tensor gather_batch(const SynthDataset& ds, std::span<const std::size_t> indices);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.05;
  double warmup_fraction = 0.05;
  std::uint64_t seed = 0;
  /// Full-set evaluation period in steps; 0 evaluates only at the end.
  std::size_t eval_every = 40;
  /// Stop once full-set accuracy reaches this value; > 1 never stops early.
  double target_accuracy = 2.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t end_step = 0;
  double loss = 0;
  double accuracy = 0;
};

struct EvalRecord {
  std::size_t step = 0;
  double accuracy = 0;
};

struct TrainHistory {
  std::vector<double> step_loss;
  std::vector<EpochRecord> epochs;
  std::vector<EvalRecord> evals;
  std::size_t steps_run = 0;
  double final_accuracy = 0;
  bool reached_target = false;
};

struct TrainObserver {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const EvalRecord&)> on_eval;
};

/// Inference-mode accuracy over the whole dataset.
double evaluate_accuracy(const Model& m, const SynthDataset& ds, std::size_t batch = 64);

/// Shuffled mini-batch AdamW training with a cosine schedule. A NaN loss
/// raises NumericError naming the step.
TrainHistory train_loop(Model& m, const SynthDataset& ds, const TrainConfig& cfg,
                        const TrainObserver& observer = {});

}  // namespace clo
