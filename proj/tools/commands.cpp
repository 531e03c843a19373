// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>
#include <utility>
#include <vector>

#include "cloformer/cloformer.hpp"

namespace clo::cli {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

VariantSpec resolve(const SpecSource& src) {
  VariantSpec spec = preset(src.variant);
  if (!src.config.empty()) spec = parse_variant(read_file(src.config), spec);
  if (!src.knobs.empty()) spec = build_ablation(spec, parse_knobs(src.knobs));
  if (src.classes != 0) {
    spec.num_classes = src.classes;
    spec.validate();
  }
  return spec;
}

// ---------------------------------------------------------------- gradcheck

struct Check {
  std::string name;
  double error;
};

using CheckList = std::vector<Check>;

void redraw(Tensor64& t, Rng& rng, double stddev = 0.5) {
  if (!t.defined()) return;
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.mutable_data()) v = dist(rng);
}

CheckList check_fc(Rng& rng) {
  auto p = make_linear<double>(6, 5, true, rng, 0.5);
  redraw(p.bias, rng);
  const Tensor64 x = normal<double>(Shape{2, 6, 3, 4}, rng);
  auto f = [&] { return fully_connected(x, p); };
  return {{"fc.x", gradient_error(f, x)}, {"fc.weight", gradient_error(f, p.weight)},
          {"fc.bias", gradient_error(f, p.bias)}};
}

CheckList check_dwconv(Rng& rng) {
  CheckList out;
  for (auto mode : {PadMode::kZero, PadMode::kCircular}) {
    for (std::size_t stride : {1u, 2u}) {
      auto p = make_dwconv<double>(4, 3, stride, true, rng, 0.5);
      p.pad_mode = mode;
      redraw(p.bias, rng);
      const Tensor64 x = normal<double>(Shape{2, 4, 6, 6}, rng);
      auto f = [&] { return dwconv2d(x, p); };
      const std::string tag = std::string("dwconv.") + (mode == PadMode::kZero ? "zero" : "circular") +
                              ".s" + std::to_string(stride);
      out.push_back({tag + ".x", gradient_error(f, x)});
      out.push_back({tag + ".weight", gradient_error(f, p.weight)});
      out.push_back({tag + ".bias", gradient_error(f, p.bias)});
    }
  }
  return out;
}

CheckList check_conv(Rng& rng) {
  auto p = make_conv<double>(3, 4, 3, 2, 1, true, rng, 0.5);
  redraw(p.bias, rng);
  const Tensor64 x = normal<double>(Shape{2, 3, 8, 8}, rng);
  auto f = [&] { return conv2d(x, p); };
  return {{"conv.x", gradient_error(f, x)}, {"conv.weight", gradient_error(f, p.weight)},
          {"conv.bias", gradient_error(f, p.bias)}};
}

CheckList check_pool(Rng& rng) {
  const Tensor64 x = normal<double>(Shape{2, 3, 8, 8}, rng);
  return {{"avg_pool.s2", gradient_error([&] { return avg_pool2d(x, 2); }, x)},
          {"avg_pool.s4", gradient_error([&] { return avg_pool2d(x, 4); }, x)},
          {"global_avg_pool", gradient_error([&] { return global_avg_pool(x); }, x)}};
}

CheckList check_softmax(Rng& rng) {
  const Tensor64 x = normal<double>(Shape{2, 3, 4, 5}, rng);
  const Tensor64 logits = normal<double>(Shape{4, 6}, rng);
  const std::vector<std::size_t> labels{5, 0, 2, 2};
  return {{"softmax_tokens", gradient_error([&] { return softmax_tokens(x); }, x)},
          {"cross_entropy",
           gradient_error([&] { return softmax_cross_entropy(logits, labels); }, logits)}};
}

CheckList check_activation(Rng& rng) {
  const Tensor64 x = normal<double>(Shape{2, 3, 4, 5}, rng);
  CheckList out;
  for (auto kind : {Activation::kIdentity, Activation::kGelu, Activation::kSwish, Activation::kSilu,
                    Activation::kTanh, Activation::kRelu, Activation::kSigmoid}) {
    out.push_back({"activation." + std::string(activation_name(kind)),
                   gradient_error([&] { return activation(kind, x, 1.5); }, x)});
  }
  return out;
}

CheckList check_layernorm(Rng& rng) {
  const Tensor64 x = normal<double>(Shape{2, 5, 3, 3}, rng);
  const Tensor64 gain = normal<double>(Shape{5}, rng);
  const Tensor64 offset = normal<double>(Shape{5}, rng);
  auto f = [&] { return layer_norm_channels(x, gain, offset); };
  return {{"layernorm.x", gradient_error(f, x)},
          {"layernorm.gain", gradient_error(f, gain)},
          {"layernorm.offset", gradient_error(f, offset)}};
}

CheckList check_attention(Rng& rng) {
  const Tensor64 q = normal<double>(Shape{2, 4, 4, 4}, rng);
  const Tensor64 k = normal<double>(Shape{2, 4, 4, 4}, rng);
  const Tensor64 v = normal<double>(Shape{2, 4, 4, 4}, rng);
  auto f = [&] { return global_branch_forward(q, k, v, 2, 2); };
  const Tensor64 w = normal<double>(Shape{1, 4, 5, 7}, rng);
  auto g = [&] { return window_attention(w, w, w, 2, 3); };
  return {{"global_branch.q", gradient_error(f, q)},
          {"global_branch.k", gradient_error(f, k)},
          {"global_branch.v", gradient_error(f, v)},
          {"window_attention", gradient_error(g, w)}};
}

CheckList check_attnconv(Rng& rng) {
  CheckList out;
  for (auto kind : {LocalKind::kSharedOnly, LocalKind::kWindowAttn, LocalKind::kContextOnly,
                    LocalKind::kWindowAttnPlusShared, LocalKind::kFull}) {
    LocalConfig cfg;
    cfg.kind = kind;
    auto p = make_attnconv<double>(4, 3, 2, cfg, rng);
    for (auto* dw : {&p.dw_q, &p.dw_k, &p.dw_v}) {
      if (!*dw) continue;
      redraw((*dw)->weight, rng);
      redraw((*dw)->bias, rng, 0.1);
    }
    for (auto& fc : p.fcs) {
      redraw(fc.weight, rng);
      redraw(fc.bias, rng, 0.1);
    }
    const Tensor64 q = normal<double>(Shape{2, 4, 5, 5}, rng);
    const Tensor64 k = normal<double>(Shape{2, 4, 5, 5}, rng);
    const Tensor64 v = normal<double>(Shape{2, 4, 5, 5}, rng);
    auto f = [&] { return local_branch_forward(q, k, v, p); };
    const std::string tag = "local." + std::string(local_kind_name(kind));
    const auto in = local_inputs(cfg);
    if (in.q) out.push_back({tag + ".q", gradient_error(f, q)});
    if (in.k) out.push_back({tag + ".k", gradient_error(f, k)});
    out.push_back({tag + ".v", gradient_error(f, v)});
    if (p.dw_v) out.push_back({tag + ".dw_v", gradient_error(f, p.dw_v->weight)});
    if (!p.fcs.empty()) out.push_back({tag + ".fc", gradient_error(f, p.fcs.front().weight)});
  }
  return out;
}

StageSpec check_stage() {
  StageSpec s;
  s.blocks = 1;
  s.channels = 16;
  s.heads = 4;
  s.local_channels = 12;
  s.global_channels = 4;
  s.attn_kernel = 3;
  s.pool_stride = 2;
  s.ffn_ratio = 2;
  s.ffn_kernel = 3;
  return s;
}

CheckList check_block(Rng& rng) {
  auto p = make_clo_block<double>(check_stage(), LocalConfig{}, 0.0, rng);
  std::vector<std::pair<std::string, Tensor64>> params{{"norm.gain", p.norm_gain},
                                                       {"qkv.weight", p.qkv.weight},
                                                       {"fuse.weight", p.fuse.weight}};
  for (auto* c : {&p.local->dw_q, &p.local->dw_k, &p.local->dw_v}) params.push_back({"dw.weight", (*c)->weight});
  for (auto& l : p.local->fcs) params.push_back({"gate.weight", l.weight});
  for (auto& [name, t] : params) redraw(t, rng);
  const Tensor64 x = normal<double>(Shape{2, 16, 8, 8}, rng);
  auto f = [&] { return clo_block_forward(x, p); };
  CheckList out{{"clo_block.x", gradient_error(f, x)}};
  for (auto& [name, t] : params) out.push_back({"clo_block." + name, gradient_error(f, t)});
  return out;
}

CheckList check_ffn(Rng& rng) {
  const Tensor64 x = normal<double>(Shape{2, 16, 8, 8}, rng);
  CheckList out;
  for (auto skip : {SkipConv::kDense, SkipConv::kDepthwise}) {
    for (std::size_t next : {std::size_t(0), std::size_t(8)}) {
      auto p = make_convffn<double>(16, next, 2, 3, skip, 0.0, rng);
      auto f = [&] { return convffn_forward(x, p); };
      const std::string tag = std::string("convffn.") + (next ? "cross." : "in_stage.") +
                              std::string(skip_conv_name(skip));
      out.push_back({tag + ".x", gradient_error(f, x)});
      out.push_back({tag + ".fc_in", gradient_error(f, p.fc_in.weight)});
      out.push_back({tag + ".dw", gradient_error(f, p.dw.weight)});
      if (p.skip_conv) out.push_back({tag + ".skip_conv", gradient_error(f, p.skip_conv->weight)});
      if (next == 0 && skip == SkipConv::kDepthwise) break;
    }
  }
  return out;
}

const std::vector<std::pair<std::string, std::function<CheckList(Rng&)>>>& check_modules() {
  static const std::vector<std::pair<std::string, std::function<CheckList(Rng&)>>> modules = {
      {"fc", check_fc},           {"dwconv", check_dwconv},     {"conv", check_conv},
      {"pool", check_pool},       {"softmax", check_softmax},   {"activation", check_activation},
      {"layernorm", check_layernorm}, {"attention", check_attention}, {"attnconv", check_attnconv},
      {"clo_block", check_block}, {"convffn", check_ffn},
  };
  return modules;
}

void write_text(const std::filesystem::path& path, const std::string& text) { write_file(path, text); }

}  // namespace

int run_build(const BuildArgs& a, std::ostream& out) {
  const VariantSpec spec = resolve(a.spec);
  const Model m = build_model<float>(spec, a.seed);
  const auto cost = count_params(m);
  if (a.print_spec) out << spec.to_text();
  out << "variant " << spec.name << ": " << m.parameters().size() << " tensors, "
      << cost.total_params << " parameters\n";
  if (!a.out.empty()) {
    save_checkpoint(m, a.out);
    out << "wrote " << a.out << "\n";
  }
  return 0;
}

int run_cost(const CostArgs& a, std::ostream& out) {
  const Model m = build_model<float>(resolve(a.spec), 0);
  const auto r = count_flops(m, a.input, a.input);
  out << (a.csv ? r.to_csv() : r.to_text());
  return 0;
}

int run_forward(const ForwardArgs& a, std::ostream& out) {
  const Model m = load_checkpoint<float>(a.ckpt);
  const Tensor x = clot::load_f32(a.input);
  const auto logits = model_forward(x, m).logits;
  const auto v = logits.data();
  const std::size_t k = logits.shape().extent(1);
  for (std::size_t n = 0; n < logits.shape().extent(0); ++n) {
    const auto row = v.subspan(n * k, k);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    out << "sample " << n << " class " << best << " logits";
    for (float z : row) out << ' ' << z;
    out << "\n";
  }
  if (!a.out.empty()) clot::save(a.out, logits);
  return 0;
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  Rng rng(11);
  std::size_t failed = 0;
  bool found = false;
  double worst = 0;
  for (const auto& [name, fn] : check_modules()) {
    if (a.module != "all" && a.module != name) continue;
    found = true;
    for (const auto& c : fn(rng)) {
      const bool ok = c.error < a.tolerance;
      failed += ok ? 0 : 1;
      worst = std::max(worst, c.error);
      out << (ok ? "ok   " : "FAIL ") << c.name << " rel_err " << sci(c.error) << "\n";
    }
  }
  if (!found) {
    std::string names;
    for (const auto& m : check_modules()) names += " " + m.first;
    throw ArgumentError("unknown module '" + a.module + "'; choose all or one of:" + names);
  }
  out << "worst rel_err " << sci(worst) << "\n";
  if (failed) throw NumericError(std::to_string(failed) + " gradient checks above " + sci(a.tolerance));
  return 0;
}

int run_equivariance(const EquivarianceArgs& a, std::ostream& out) {
  PadMode mode;
  if (a.padding == "circular") {
    mode = PadMode::kCircular;
  } else if (a.padding == "zero") {
    mode = PadMode::kZero;
  } else {
    throw ArgumentError("padding must be circular or zero, got '" + a.padding + "'");
  }
  Rng rng(a.seed);
  auto p = make_attnconv<float>(a.channels, 3, a.channels / 2 ? a.channels / 2 : 1, LocalConfig{}, rng);
  set_pad_mode(p, mode);
  for (auto* dw : {&p.dw_q, &p.dw_k, &p.dw_v}) (*dw)->weight = normal<float>((*dw)->weight.shape(), rng, 0.0f, 0.4f);
  for (auto& fc : p.fcs) fc.weight = normal<float>(fc.weight.shape(), rng, 0.0f, 0.4f);
  const Shape shape{1, a.channels, a.size, a.size};
  const Tensor q = normal<float>(shape, rng);
  const Tensor k = normal<float>(shape, rng);
  const Tensor v = normal<float>(shape, rng);
  const Tensor base = attnconv_forward(q, k, v, p);
  float worst = 0;
  for (long dy = 0; dy <= 2; ++dy) {
    for (long dx = 0; dx <= 2; ++dx) {
      const Tensor y = attnconv_forward(roll_spatial(q, dy, dx), roll_spatial(k, dy, dx), roll_spatial(v, dy, dx), p);
      const float d = max_abs_diff(y, roll_spatial(base, dy, dx));
      worst = std::max(worst, d);
      out << "shift (" << dy << "," << dx << ") max_abs_diff " << sci(d) << "\n";
    }
  }
  out << a.padding << " padding: worst " << sci(worst) << "\n";
  if (mode == PadMode::kCircular && !(worst < 1e-5f)) {
    throw NumericError("circular attnconv is not shift equivariant (" + sci(worst) + ")");
  }
  return 0;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  const VariantSpec spec = resolve(a.spec);
  if (spec.num_classes > kMaxSynthClasses) {
    throw ConfigurationError("variant has " + std::to_string(spec.num_classes) +
                             " classes; the synthetic set renders at most 16 (use --classes)");
  }
  const auto ds = gen_synth_dataset(a.samples, spec.num_classes, a.input, a.data_seed);
  Model m = build_model<float>(spec, a.seed);
  TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.batch = a.batch;
  cfg.lr = a.lr;
  cfg.weight_decay = a.weight_decay;
  cfg.seed = a.seed;
  cfg.eval_every = a.eval_every;
  cfg.target_accuracy = a.target;
  TrainObserver obs;
  obs.on_epoch = [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << " step " << e.end_step << " loss " << fixed(e.loss, 4) << " acc "
        << fixed(e.accuracy, 3) << "\n";
    out.flush();
  };
  obs.on_eval = [&](const EvalRecord& e) {
    out << "eval step " << e.step << " train_accuracy " << fixed(e.accuracy, 4) << "\n";
    out.flush();
  };
  const auto h = train_loop(m, ds, cfg, obs);
  out << "done steps " << h.steps_run << " train_accuracy " << fixed(h.final_accuracy, 4)
      << (h.reached_target ? " (target reached)" : "") << "\n";
  if (!a.out.empty()) {
    save_checkpoint(m, a.out);
    out << "wrote " << a.out << "\n";
  }
  return 0;
}

int run_spectrum(const SpectrumArgs& a, std::ostream& out) {
  const Model m = load_checkpoint<float>(a.ckpt);
  const std::size_t classes = std::clamp<std::size_t>(m.spec.num_classes, 2, kMaxSynthClasses);
  const auto ds = gen_synth_dataset(a.samples, classes, a.input, a.data_seed);
  const auto reports = branch_spectra(m, ds.images, a.stage, a.bands);
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  const char* names[3] = {"shared", "full", "global"};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string stem = "stage" + std::to_string(a.stage) + "_" + names[i];
    write_text(dir / (stem + ".pgm"), to_pgm(reports[i]));
    write_text(dir / (stem + ".csv"), bands_csv(reports[i].bands));
    out << stem << " " << reports[i].height << "x" << reports[i].width << " high_band_mass "
        << fixed(high_band_mass(reports[i].bands), 4) << "\n";
  }
  return 0;
}

int run_ablate(const AblateArgs& a, std::ostream& out) {
  if (a.list) {
    for (const auto& row : ablation_catalog()) {
      out << row.table << " | " << row.name << " |";
      bool first = true;
      for (const auto& [k, v] : row.knobs) {
        out << (first ? " " : ",") << k << "=" << v;
        first = false;
      }
      out << "\n";
    }
    return 0;
  }
  const VariantSpec spec = resolve(a.spec);
  const Model m = build_model<float>(spec, 0);
  const auto cost = count_flops(m, a.input, a.input);
  Rng rng(1);
  const auto logits = model_forward(normal<float>(Shape{1, 3, a.input, a.input}, rng), m).logits;
  out << "params " << cost.total_params << "\nflops " << cost.total_flops << " at " << a.input << "x"
      << a.input << "\nlogits " << logits.shape().str() << "\n";
  return 0;
}

}  // namespace clo::cli
