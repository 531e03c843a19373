// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cloformer/error.hpp"

namespace clo {

template <typename T>
BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                     std::span<const std::size_t> labels) {
  const Shape& s = logits.shape();
  const std::size_t n = s.n();
  const std::size_t k = s.c() * s.h() * s.w();
  if (labels.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(n));
  }
  for (std::size_t label : labels) {
    if (label >= k) {
      throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                          " out of range for " + std::to_string(k) + " classes");
    }
  }
  const auto x = logits.data();
  Buffer<T> probs(n * k);
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = x.data() + i * k;
    const T peak = *std::max_element(row, row + k);
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(double(row[j] - peak));
    const double log_total = std::log(total);
    for (std::size_t j = 0; j < k; ++j)
      probs[i * k + j] = static_cast<T>(std::exp(double(row[j] - peak) - log_total));
    loss += log_total - double(row[labels[i]] - peak);
  }
  std::vector<std::size_t> targets(labels.begin(), labels.end());
  return BasicTensor<T>::from_op(
      "softmax_cross_entropy", Shape::scalar(), {static_cast<T>(loss / double(n))}, {logits},
      [probs = std::move(probs), targets = std::move(targets), n,
       k](const detail::BackwardArgs<T>& g) {
        auto gx = g.input_grads[0];
        if (gx.empty()) return;
        const T upstream = g.grad_out[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const T target = j == targets[i] ? T(1) : T(0);
            gx[i * k + j] += upstream * (probs[i * k + j] - target);
          }
        }
      });
}

double cosine_lr(std::size_t step, std::size_t total, double base_lr, std::size_t warmup) {
  if (total <= warmup) {
    throw ArgumentError("cosine_lr: total " + std::to_string(total) + " must exceed warmup " +
                        std::to_string(warmup));
  }
  if (step > total) {
    throw ArgumentError("cosine_lr: step " + std::to_string(step) + " beyond total " +
                        std::to_string(total));
  }
  if (step < warmup) return base_lr * double(step) / double(warmup);
  const double progress = double(step - warmup) / double(total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
double OptimState<T>::current_lr() const {
  if (total_steps == 0) return base_lr;
  return cosine_lr(std::min(step, total_steps), total_steps, base_lr, warmup_steps);
}

template <typename T>
void adamw_step(const std::vector<BasicTensor<T>>& params, const std::vector<BasicTensor<T>>& grads,
                OptimState<T>& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adamw_step: " + std::to_string(params.size()) + " params but " +
                         std::to_string(grads.size()) + " grads");
  }
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.push_back(BasicTensor<T>::zeros(p.shape()));
      state.second.push_back(BasicTensor<T>::zeros(p.shape()));
    }
  }
  if (state.first.size() != params.size()) {
    throw DimensionError("adamw_step: optimizer state tracks " +
                         std::to_string(state.first.size()) + " params, got " +
                         std::to_string(params.size()));
  }
  const double lr = state.current_lr();
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  const T decay = static_cast<T>(1.0 - lr * state.weight_decay);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    BasicTensor<T> p = params[i];
    const auto& g = grads[i];
    if (!g.shape().same_extents(p.shape()) || !state.first[i].shape().same_extents(p.shape())) {
      throw DimensionError("adamw_step: param " + std::to_string(i) + " shape " +
                           p.shape().str() + " vs grad " + g.shape().str());
    }
    auto pv = p.mutable_data();
    auto mv = state.first[i].mutable_data();
    auto vv = state.second[i].mutable_data();
    const auto gv = g.data();
    for (std::size_t j = 0; j < pv.size(); ++j) {
      mv[j] = b1 * mv[j] + (T(1) - b1) * gv[j];
      vv[j] = b2 * vv[j] + (T(1) - b2) * gv[j] * gv[j];
      const double m_hat = double(mv[j]) / c1;
      const double v_hat = double(vv[j]) / c2;
      pv[j] = decay * pv[j];
      pv[j] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

namespace {

struct Color {
  double r, g, b;
};

constexpr Color kPalette[4] = {
    {0.90, 0.15, 0.15},
    {0.15, 0.85, 0.20},
    {0.15, 0.25, 0.90},
    {0.90, 0.85, 0.15},
};

bool inside(std::size_t shape, double dx, double dy, double r) {
  switch (shape) {
    case 0:
      return dx * dx + dy * dy <= r * r;
    case 1:
      return std::abs(dx) <= 0.8 * r && std::abs(dy) <= 0.8 * r;
    case 2:
      return dy >= -r && dy <= r && std::abs(dx) <= 0.5 * (dy + r);
    default:
      return (std::abs(dx) <= r / 3 && std::abs(dy) <= r) ||
             (std::abs(dy) <= r / 3 && std::abs(dx) <= r);
  }
}

}  // namespace

SynthDataset gen_synth_dataset(std::size_t n, std::size_t classes, std::size_t hw,
                               std::uint64_t seed) {
  if (classes < 2) throw ArgumentError("gen_synth_dataset: need at least 2 classes");
  if (classes > kMaxSynthClasses) {
    throw ArgumentError("gen_synth_dataset: " + std::to_string(classes) +
                        " classes exceed the 16 renderable shape/color combinations");
  }
  if (hw == 0 || hw % 32 != 0) {
    throw ArgumentError("gen_synth_dataset: image size " + std::to_string(hw) +
                        " not a positive multiple of 32");
  }
  if (n == 0) throw ArgumentError("gen_synth_dataset: empty dataset");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t plane = hw * hw;
  std::vector<float> pixels(n * 3 * plane);
  SynthDataset ds;
  ds.num_classes = classes;
  ds.seed = seed;
  ds.labels.resize(n);
  const double size = double(hw);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    ds.labels[i] = label;
    const std::size_t shape = label % 4;
    const Color base = kPalette[label / 4];
    const double jitter[3] = {0.16 * (unit(rng) - 0.5), 0.16 * (unit(rng) - 0.5),
                              0.16 * (unit(rng) - 0.5)};
    const double color[3] = {base.r + jitter[0], base.g + jitter[1], base.b + jitter[2]};
    const double background = 0.2 + 0.3 * unit(rng);
    const double cx = size * (0.3 + 0.4 * unit(rng));
    const double cy = size * (0.3 + 0.4 * unit(rng));
    const double radius = size * (0.16 + 0.12 * unit(rng));
    float* img = pixels.data() + i * 3 * plane;
    for (std::size_t y = 0; y < hw; ++y) {
      for (std::size_t x = 0; x < hw; ++x) {
        const bool in = inside(shape, double(x) + 0.5 - cx, double(y) + 0.5 - cy, radius);
        for (std::size_t c = 0; c < 3; ++c) {
          const double noise = 0.1 * (unit(rng) - 0.5);
          const double v = (in ? color[c] : background) + noise;
          img[c * plane + y * hw + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  ds.images = Tensor(Shape{n, 3, hw, hw}, std::move(pixels));
  return ds;
}

Tensor gather_batch(const SynthDataset& ds, std::span<const std::size_t> indices) {
  const Shape& s = ds.images.shape();
  const std::size_t sample = s.c() * s.plane();
  std::vector<float> out(indices.size() * sample);
  const auto src = ds.images.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= s.n()) throw ArgumentError("gather_batch: index out of range");
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * sample), sample,
                out.begin() + static_cast<std::ptrdiff_t>(i * sample));
  }
  return Tensor(Shape{indices.size(), s.c(), s.h(), s.w()}, std::move(out));
}

namespace {

std::size_t count_correct(const Tensor& logits, std::span<const std::size_t> labels) {
  const std::size_t k = logits.shape().c();
  const auto v = logits.data();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = v.subspan(i * k, k);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == labels[i];
  }
  return correct;
}

}  // namespace

double evaluate_accuracy(const Model& m, const SynthDataset& ds, std::size_t batch) {
  NoGradGuard no_grad;
  const std::size_t n = ds.labels.size();
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch) {
    idx.resize(std::min(batch, n - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = model_forward(gather_batch(ds, idx), m).logits;
    correct += count_correct(logits, std::span(ds.labels).subspan(start, idx.size()));
  }
  return double(correct) / double(n);
}

TrainHistory train_loop(Model& m, const SynthDataset& ds, const TrainConfig& cfg,
                        const TrainObserver& observer) {
  if (ds.num_classes != m.spec.num_classes) {
    throw ConfigurationError("train_loop: dataset has " + std::to_string(ds.num_classes) +
                             " classes, model has " + std::to_string(m.spec.num_classes));
  }
  if (cfg.batch == 0 || cfg.steps == 0) throw ArgumentError("train_loop: empty schedule");
  const std::vector<Tensor> params = m.parameters();
  for (Tensor p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  OptimState<float> state;
  state.base_lr = cfg.lr;
  state.weight_decay = cfg.weight_decay;
  state.total_steps = cfg.steps;
  state.warmup_steps = static_cast<std::size_t>(std::llround(cfg.warmup_fraction * double(cfg.steps)));

  Rng shuffle_rng(cfg.seed);
  Rng drop_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const std::size_t n = ds.labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;
  std::size_t epoch = 0;
  EpochRecord current;
  std::size_t epoch_seen = 0;
  std::size_t epoch_correct = 0;
  double epoch_loss = 0;
  TrainHistory history;

  auto close_epoch = [&](std::size_t step) {
    if (epoch_seen == 0) return;
    current.epoch = epoch;
    current.end_step = step;
    current.accuracy = double(epoch_correct) / double(epoch_seen);
    current.loss = epoch_loss / double(epoch_seen);
    history.epochs.push_back(current);
    if (observer.on_epoch) observer.on_epoch(current);
    epoch_seen = epoch_correct = 0;
    epoch_loss = 0;
  };

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor >= n) {
      close_epoch(step);
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
      ++epoch;
    }
    const std::size_t take = std::min(cfg.batch, n - cursor);
    const std::span<const std::size_t> idx(order.data() + cursor, take);
    cursor += take;
    std::vector<std::size_t> labels(take);
    for (std::size_t i = 0; i < take; ++i) labels[i] = ds.labels[idx[i]];

    ForwardOptions options;
    options.training = true;
    options.rng = &drop_rng;
    const Tensor logits = model_forward(gather_batch(ds, idx), m, options).logits;
    const Tensor loss = softmax_cross_entropy(logits, labels);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericError("train_loop: non-finite loss at step " + std::to_string(step));
    }
    loss.backward();
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Tensor& p : params) grads.push_back(p.grad());
    adamw_step(params, grads, state);
    for (Tensor p : params) p.zero_grad();

    history.step_loss.push_back(value);
    history.steps_run = step + 1;
    epoch_loss += value * double(take);
    epoch_seen += take;
    epoch_correct += count_correct(logits, labels);

    const bool last = step + 1 == cfg.steps;
    if ((cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0) || last) {
      const EvalRecord eval{step + 1, evaluate_accuracy(m, ds)};
      history.evals.push_back(eval);
      history.final_accuracy = eval.accuracy;
      if (observer.on_eval) observer.on_eval(eval);
      if (eval.accuracy >= cfg.target_accuracy) history.reached_target = true;
      if (history.reached_target || last) {
        close_epoch(step + 1);
        break;
      }
    }
  }
  for (Tensor p : params) p.set_requires_grad(false);
  return history;
}

template BasicTensor<float> softmax_cross_entropy(const BasicTensor<float>&,
                                                  std::span<const std::size_t>);
template BasicTensor<double> softmax_cross_entropy(const BasicTensor<double>&,
                                                   std::span<const std::size_t>);
template struct OptimState<float>;
template struct OptimState<double>;
template void adamw_step(const std::vector<BasicTensor<float>>&,
                         const std::vector<BasicTensor<float>>&, OptimState<float>&);
template void adamw_step(const std::vector<BasicTensor<double>>&,
                         const std::vector<BasicTensor<double>>&, OptimState<double>&);

}  // namespace clo
