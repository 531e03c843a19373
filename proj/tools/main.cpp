// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "cloformer/error.hpp"
#include "commands.hpp"

namespace {

using namespace clo::cli;

void add_spec_options(CLI::App* cmd, SpecSource& s, const std::string& default_variant) {
  s.variant = default_variant;
  cmd->add_option("--variant", s.variant, "Preset: xxs, xs, s or xxs64")->capture_default_str();
  cmd->add_option("--config", s.config, "Key-value variant file applied over the preset");
  cmd->add_option("--knobs", s.knobs, "Ablation knobs, k=v,...");
}

int fail(std::string_view category, const std::string& detail) {
  std::string line = detail;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << "ERROR " << category << ": " << line << std::endl;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloformer: build, inspect, train and probe CloFormer models"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* c_build = app.add_subcommand("build", "Build a variant and report its size");
  add_spec_options(c_build, build.spec, "xxs");
  c_build->add_option("--seed", build.seed, "Initialization seed");
  c_build->add_option("--out", build.out, "Write the initialized model as a checkpoint");
  c_build->add_flag("--print-spec", build.print_spec, "Print the resolved variant file");

  CostArgs cost;
  auto* c_cost = app.add_subcommand("cost", "Per-module parameter and FLOP report");
  add_spec_options(c_cost, cost.spec, "xxs");
  c_cost->add_option("--input", cost.input, "Square input size")->capture_default_str();
  c_cost->add_flag("--csv", cost.csv, "Emit name,params,flops rows");

  ForwardArgs fwd;
  auto* c_fwd = app.add_subcommand("forward", "Run a checkpoint on a CLOT tensor");
  c_fwd->add_option("--ckpt", fwd.ckpt, "Checkpoint file")->required();
  c_fwd->add_option("--input", fwd.input, "CLOT tensor (N,3,H,W)")->required();
  c_fwd->add_option("--out", fwd.out, "Write logits as CLOT");

  GradcheckArgs grad;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks in float64");
  c_grad->add_option("--module", grad.module, "Module to check, or all")->capture_default_str();
  c_grad->add_option("--tolerance", grad.tolerance, "Relative error bound")->capture_default_str();

  EquivarianceArgs eq;
  auto* c_eq = app.add_subcommand("equivariance", "AttnConv against circular shifts in {0,1,2}^2");
  c_eq->add_option("--padding", eq.padding, "circular or zero")->capture_default_str();
  c_eq->add_option("--channels", eq.channels, "Channels")->capture_default_str();
  c_eq->add_option("--size", eq.size, "Spatial extent")->capture_default_str();
  c_eq->add_option("--seed", eq.seed, "Seed");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Overfit the synthetic shape set");
  add_spec_options(c_train, train.spec, "xxs64");
  c_train->add_option("--classes", train.spec.classes, "Override the class count");
  c_train->add_option("--steps", train.steps, "Optimizer steps")->capture_default_str();
  c_train->add_option("--seed", train.seed, "Model and shuffle seed")->capture_default_str();
  c_train->add_option("--data-seed", train.data_seed, "Dataset seed")->capture_default_str();
  c_train->add_option("--out", train.out, "Checkpoint to write");
  c_train->add_option("--samples", train.samples, "Dataset size")->capture_default_str();
  c_train->add_option("--input", train.input, "Image size")->capture_default_str();
  c_train->add_option("--batch", train.batch, "Batch size")->capture_default_str();
  c_train->add_option("--lr", train.lr, "Peak learning rate")->capture_default_str();
  c_train->add_option("--wd", train.weight_decay, "Weight decay")->capture_default_str();
  c_train->add_option("--target", train.target, "Stop at this train accuracy");
  c_train->add_option("--eval-every", train.eval_every, "Full-set evaluation period")->capture_default_str();

  SpectrumArgs spec;
  auto* c_spec = app.add_subcommand("spectrum", "Branch spectra of a trained model");
  c_spec->add_option("--ckpt", spec.ckpt, "Checkpoint file")->required();
  c_spec->add_option("--stage", spec.stage, "2 or 3")->capture_default_str();
  c_spec->add_option("--out", spec.out, "Output directory")->required();
  c_spec->add_option("--input", spec.input, "Probe image size")->capture_default_str();
  c_spec->add_option("--samples", spec.samples, "Probe images")->capture_default_str();
  c_spec->add_option("--bands", spec.bands, "Radial bands")->capture_default_str();
  c_spec->add_option("--data-seed", spec.data_seed, "Probe set seed")->capture_default_str();

  AblateArgs abl;
  auto* c_abl = app.add_subcommand("ablate", "Build and run one ablation configuration");
  add_spec_options(c_abl, abl.spec, "xxs64");
  c_abl->add_flag("--list", abl.list, "List the catalog rows");
  c_abl->add_option("--input", abl.input, "Square input size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("argument", e.what());
  }

  try {
    auto& out = std::cout;
    if (*c_build) return run_build(build, out);
    if (*c_cost) return run_cost(cost, out);
    if (*c_fwd) return run_forward(fwd, out);
    if (*c_grad) return run_gradcheck(grad, out);
    if (*c_eq) return run_equivariance(eq, out);
    if (*c_train) return run_train(train, out);
    if (*c_spec) return run_spectrum(spec, out);
    if (*c_abl) return run_ablate(abl, out);
  } catch (const clo::Error& e) {
    return fail(clo::category_name(e.category()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
