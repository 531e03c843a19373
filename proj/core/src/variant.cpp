// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/variant.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

#include "cloformer/error.hpp"

namespace clo {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::pair<E, std::string_view> (&table)[N],
             std::string_view what) {
  for (const auto& [value, label] : table)
    if (label == name) return value;
  std::string known;
  for (const auto& entry : table) known += (known.empty() ? "" : "|") + std::string(entry.second);
  throw ArgumentError("unknown " + std::string(what) + " '" + std::string(name) + "' (" + known +
                      ")");
}

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, label] : table)
    if (v == value) return label;
  return "?";
}

constexpr std::pair<LocalKind, std::string_view> kLocalKinds[] = {
    {LocalKind::kNone, "none"},
    {LocalKind::kSharedOnly, "shared_only"},
    {LocalKind::kContextOnly, "context_only"},
    {LocalKind::kWindowAttn, "window_attn"},
    {LocalKind::kWindowAttnPlusShared, "window_attn_plus_shared"},
    {LocalKind::kFull, "full"},
};
constexpr std::pair<StemKind, std::string_view> kStemKinds[] = {
    {StemKind::kConv, "conv"},
    {StemKind::kPatchEmbed, "patch_embed"},
};
constexpr std::pair<InitScheme, std::string_view> kInitSchemes[] = {
    {InitScheme::kTruncNormal, "trunc_normal"},
    {InitScheme::kFanIn, "fan_in"},
};

constexpr std::pair<SkipConv, std::string_view> kSkipConvs[] = {
    {SkipConv::kDense, "dense"},
    {SkipConv::kDepthwise, "depthwise"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigurationError(std::string(key) + ": expected a non-negative integer, got '" +
                             std::string(value) + "'");
  }
  return out;
}

double to_real(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string text(value);
    const double out = std::stod(text, &used);
    if (used == text.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  throw ConfigurationError(std::string(key) + ": expected a real number, got '" +
                           std::string(value) + "'");
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigurationError(std::string(key) + ": expected true|false, got '" +
                           std::string(value) + "'");
}

template <typename F>
auto as_config(std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const ArgumentError& e) {
    throw ConfigurationError(std::string(key) + ": " + e.what());
  }
}

std::string stage_field(std::size_t stage, std::string_view field) {
  return "stage" + std::to_string(stage + 1) + "." + std::string(field);
}

void apply_key(VariantSpec& spec, std::string_view key, std::string_view value) {
  if (key == "name") {
    spec.name = std::string(value);
  } else if (key == "num_classes") {
    spec.num_classes = to_count(key, value);
  } else if (key == "stem") {
    spec.stem = as_config(key, [&] { return parse_stem_kind(value); });
  } else if (key == "stem_channels") {
    spec.stem_channels = to_count(key, value);
  } else if (key == "drop_path_max") {
    spec.drop_path_max = to_real(key, value);
  } else if (key == "skip") {
    spec.skip = as_config(key, [&] { return parse_skip_conv(value); });
  } else if (key == "init") {
    spec.init = as_config(key, [&] { return parse_init_scheme(value); });
  } else if (key == "local.kind") {
    spec.local.kind = as_config(key, [&] { return parse_local_kind(value); });
  } else if (key == "local.use_k") {
    spec.local.use_k = to_bool(key, value);
  } else if (key == "local.qk_dwconv") {
    spec.local.qk_dwconv = to_bool(key, value);
  } else if (key == "local.gate_depth") {
    spec.local.gate_depth = static_cast<int>(to_count(key, value));
  } else if (key == "local.inner_act") {
    spec.local.inner = as_config(key, [&] { return parse_activation(value); });
  } else if (key == "local.outer_act") {
    spec.local.outer = as_config(key, [&] { return parse_activation(value); });
  } else if (key == "local.swish_beta") {
    spec.local.swish_beta = to_real(key, value);
  } else if (key.size() > 7 && key.substr(0, 5) == "stage" && key[6] == '.') {
    const int index = key[5] - '1';
    if (index < 0 || index > 3) {
      throw ConfigurationError("unknown key '" + std::string(key) + "' (stages are 1..4)");
    }
    StageSpec& s = spec.stages[static_cast<std::size_t>(index)];
    const std::string_view field = key.substr(7);
    if (field == "blocks") {
      s.blocks = to_count(key, value);
    } else if (field == "channels") {
      s.channels = to_count(key, value);
    } else if (field == "heads") {
      s.heads = to_count(key, value);
    } else if (field == "split") {
      const auto comma = value.find(',');
      if (comma == std::string_view::npos) {
        throw ConfigurationError(std::string(key) + ": expected 'local,global'");
      }
      s.local_channels = to_count(key, trim(value.substr(0, comma)));
      s.global_channels = to_count(key, trim(value.substr(comma + 1)));
    } else if (field == "kernel") {
      s.attn_kernel = to_count(key, value);
    } else if (field == "pool_stride") {
      s.pool_stride = to_count(key, value);
    } else if (field == "ffn_ratio") {
      s.ffn_ratio = to_count(key, value);
    } else if (field == "ffn_kernel") {
      s.ffn_kernel = to_count(key, value);
    } else {
      throw ConfigurationError("unknown key '" + std::string(key) + "'");
    }
  } else {
    throw ConfigurationError("unknown key '" + std::string(key) + "'");
  }
}

VariantSpec make_preset(std::string name, const std::array<std::size_t, 4>& channels,
                        const std::array<std::size_t, 4>& heads,
                        const std::array<std::size_t, 4>& local, std::size_t classes,
                        double drop_path) {
  constexpr std::array<std::size_t, 4> kBlocks = {2, 2, 6, 2};
  constexpr std::array<std::size_t, 4> kKernels = {3, 5, 7, 9};
  constexpr std::array<std::size_t, 4> kPool = {8, 4, 2, 1};
  VariantSpec spec;
  spec.name = std::move(name);
  for (std::size_t i = 0; i < 4; ++i) {
    StageSpec& s = spec.stages[i];
    s.blocks = kBlocks[i];
    s.channels = channels[i];
    s.heads = heads[i];
    s.local_channels = local[i];
    s.global_channels = channels[i] - local[i];
    s.attn_kernel = kKernels[i];
    s.pool_stride = kPool[i];
    s.ffn_ratio = 4;
    s.ffn_kernel = 5;
  }
  spec.stem_channels = channels[0] / 2;
  spec.num_classes = classes;
  spec.drop_path_max = drop_path;
  return spec;
}

bool gated(LocalKind kind) { return kind == LocalKind::kContextOnly || kind == LocalKind::kFull; }

}  // namespace

LocalKind parse_local_kind(std::string_view name) {
  return parse_enum(name, kLocalKinds, "local kind");
}
std::string_view local_kind_name(LocalKind kind) { return enum_name(kind, kLocalKinds); }
StemKind parse_stem_kind(std::string_view name) {
  return parse_enum(name, kStemKinds, "stem kind");
}
std::string_view stem_kind_name(StemKind kind) { return enum_name(kind, kStemKinds); }
SkipConv parse_skip_conv(std::string_view name) {
  return parse_enum(name, kSkipConvs, "skip conv");
}
std::string_view skip_conv_name(SkipConv kind) { return enum_name(kind, kSkipConvs); }

InitScheme parse_init_scheme(std::string_view name) {
  return parse_enum(name, kInitSchemes, "init scheme");
}
std::string_view init_scheme_name(InitScheme kind) { return enum_name(kind, kInitSchemes); }

std::size_t VariantSpec::total_blocks() const {
  std::size_t total = 0;
  for (const auto& s : stages) total += s.blocks;
  return total;
}

void VariantSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigurationError(field + ": " + why);
  };
  if (num_classes < 1) fail("num_classes", "must be >= 1");
  if (stem_channels < 1) fail("stem_channels", "must be >= 1");
  if (!(drop_path_max >= 0.0 && drop_path_max < 1.0)) fail("drop_path_max", "must be in [0, 1)");
  if (local.gate_depth < 0 || local.gate_depth > 8) fail("local.gate_depth", "must be in [0, 8]");
  if (!(local.swish_beta > 0.0)) fail("local.swish_beta", "must be > 0");
  const bool no_local = local.kind == LocalKind::kNone;
  for (std::size_t i = 0; i < 4; ++i) {
    const StageSpec& s = stages[i];
    auto field = [i](std::string_view f) { return stage_field(i, f); };
    if (s.blocks < 1) fail(field("blocks"), "must be >= 1");
    if (s.channels < 1) fail(field("channels"), "must be >= 1");
    if (s.heads < 1) fail(field("heads"), "must be >= 1");
    if (s.channels % s.heads != 0) {
      fail(field("heads"), std::to_string(s.channels) + " channels not divisible by " +
                               std::to_string(s.heads) + " heads");
    }
    if (s.local_channels + s.global_channels != s.channels) {
      fail(field("split"), std::to_string(s.local_channels) + " + " +
                               std::to_string(s.global_channels) + " != " +
                               std::to_string(s.channels) + " channels");
    }
    const std::size_t d = s.head_dim();
    if (s.local_channels % d != 0 || s.global_channels % d != 0) {
      fail(field("split"), "branch widths must be multiples of head_dim " + std::to_string(d));
    }
    if (no_local && s.local_channels != 0) {
      fail(field("split"), "local.kind = none requires zero local channels");
    }
    if (!no_local && s.local_channels == 0) {
      fail(field("split"), "local.kind = " + std::string(local_kind_name(local.kind)) +
                               " requires local channels");
    }
    if (s.attn_kernel % 2 == 0) fail(field("kernel"), "must be odd");
    if (s.pool_stride < 1) fail(field("pool_stride"), "must be >= 1");
    if (s.ffn_ratio < 1) fail(field("ffn_ratio"), "must be >= 1");
    if (s.ffn_kernel % 2 == 0) fail(field("ffn_kernel"), "must be odd");
  }
}

std::string VariantSpec::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "name = " << name << '\n'
      << "num_classes = " << num_classes << '\n'
      << "stem = " << stem_kind_name(stem) << '\n'
      << "stem_channels = " << stem_channels << '\n'
      << "drop_path_max = " << drop_path_max << '\n'
      << "skip = " << skip_conv_name(skip) << '\n'
      << "init = " << init_scheme_name(init) << '\n'
      << "local.kind = " << local_kind_name(local.kind) << '\n'
      << "local.use_k = " << (local.use_k ? "true" : "false") << '\n'
      << "local.qk_dwconv = " << (local.qk_dwconv ? "true" : "false") << '\n'
      << "local.gate_depth = " << local.gate_depth << '\n'
      << "local.inner_act = " << activation_name(local.inner) << '\n'
      << "local.outer_act = " << activation_name(local.outer) << '\n'
      << "local.swish_beta = " << local.swish_beta << '\n';
  for (std::size_t i = 0; i < 4; ++i) {
    const StageSpec& s = stages[i];
    out << stage_field(i, "blocks") << " = " << s.blocks << '\n'
        << stage_field(i, "channels") << " = " << s.channels << '\n'
        << stage_field(i, "heads") << " = " << s.heads << '\n'
        << stage_field(i, "split") << " = " << s.local_channels << "," << s.global_channels << '\n'
        << stage_field(i, "kernel") << " = " << s.attn_kernel << '\n'
        << stage_field(i, "pool_stride") << " = " << s.pool_stride << '\n'
        << stage_field(i, "ffn_ratio") << " = " << s.ffn_ratio << '\n'
        << stage_field(i, "ffn_kernel") << " = " << s.ffn_kernel << '\n';
  }
  return out.str();
}

VariantSpec preset(std::string_view name) {
  if (name == "xxs") {
    return make_preset("xxs", {32, 64, 128, 256}, {4, 4, 8, 16}, {24, 32, 64, 64}, 1000, 0.0);
  }
  if (name == "xs") {
    return make_preset("xs", {48, 96, 160, 352}, {3, 6, 10, 22}, {32, 48, 80, 112}, 1000, 0.06);
  }
  if (name == "s") {
    return make_preset("s", {64, 128, 224, 448}, {4, 8, 14, 28}, {48, 64, 112, 112}, 1000, 0.06);
  }
  if (name == "xxs64") {
    VariantSpec spec =
        make_preset("xxs64", {16, 32, 64, 128}, {4, 4, 8, 16}, {12, 16, 32, 32}, 8, 0.0);
    spec.init = InitScheme::kFanIn;
    return spec;
  }
  throw ConfigurationError("unknown variant '" + std::string(name) + "' (xxs|xs|s|xxs64)");
}

VariantSpec parse_variant(std::string_view text, const VariantSpec& base) {
  VariantSpec spec = base;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigurationError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_key(spec, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  spec.validate();
  return spec;
}

Knobs parse_knobs(std::string_view text) {
  Knobs knobs;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigurationError("knob '" + std::string(item) + "': expected k=v");
    }
    const std::string key(trim(item.substr(0, eq)));
    if (!knobs.emplace(key, std::string(trim(item.substr(eq + 1)))).second) {
      throw ConfigurationError("knob '" + key + "' given twice");
    }
  }
  return knobs;
}

VariantSpec build_ablation(const VariantSpec& base, const Knobs& knobs) {
  static const std::string_view kKnown[] = {
      "branch",    "local",     "use_k", "qk_dwconv",  "gate_depth", "extra_pairs",
      "inner_act", "outer_act", "stem",  "ffn_kernel", "skip",       "swish_beta", "init"};
  static const std::string_view kGateKnobs[] = {"use_k",       "qk_dwconv", "gate_depth",
                                                "extra_pairs", "inner_act", "outer_act",
                                                "swish_beta"};
  for (const auto& [key, value] : knobs) {
    bool known = false;
    for (auto k : kKnown) known = known || key == k;
    if (!known) throw ConfigurationError("unknown knob '" + key + "'");
  }
  auto has = [&](std::string_view key) { return knobs.count(std::string(key)) > 0; };
  auto get = [&](std::string_view key) -> const std::string& {
    return knobs.at(std::string(key));
  };

  VariantSpec spec = base;
  const std::string branch = has("branch") ? get("branch") : "both";
  if (branch != "both" && branch != "only_global" && branch != "only_local") {
    throw ConfigurationError("branch: expected both|only_global|only_local, got '" + branch + "'");
  }
  if (branch == "only_global") {
    if (has("local")) throw ConfigurationError("branch=only_global contradicts local=" + get("local"));
    for (auto k : kGateKnobs) {
      if (has(k)) {
        throw ConfigurationError("branch=only_global contradicts gate knob " + std::string(k));
      }
    }
  }
  if (has("gate_depth") && has("extra_pairs")) {
    throw ConfigurationError("gate_depth and extra_pairs both set");
  }
  if (has("local")) {
    const LocalKind kind = as_config("local", [&] { return parse_local_kind(get("local")); });
    if (kind == LocalKind::kNone) {
      throw ConfigurationError("local=none: use branch=only_global instead");
    }
    spec.local.kind = kind;
  }
  if (!gated(spec.local.kind) && branch != "only_global") {
    for (auto k : kGateKnobs) {
      if (has(k)) {
        throw ConfigurationError("local=" + std::string(local_kind_name(spec.local.kind)) +
                                 " has no context gate; knob " + std::string(k) +
                                 " contradicts it");
      }
    }
  }
  if (has("use_k")) spec.local.use_k = to_bool("use_k", get("use_k"));
  if (has("qk_dwconv")) spec.local.qk_dwconv = to_bool("qk_dwconv", get("qk_dwconv"));
  if (has("gate_depth")) spec.local.gate_depth = static_cast<int>(to_count("gate_depth", get("gate_depth")));
  if (has("extra_pairs")) {
    spec.local.gate_depth = 1 + static_cast<int>(to_count("extra_pairs", get("extra_pairs")));
  }
  if (has("inner_act")) {
    spec.local.inner = as_config("inner_act", [&] { return parse_activation(get("inner_act")); });
  }
  if (has("outer_act")) {
    spec.local.outer = as_config("outer_act", [&] { return parse_activation(get("outer_act")); });
  }
  if (has("swish_beta")) spec.local.swish_beta = to_real("swish_beta", get("swish_beta"));
  if (has("stem")) spec.stem = as_config("stem", [&] { return parse_stem_kind(get("stem")); });
  if (has("skip")) spec.skip = as_config("skip", [&] { return parse_skip_conv(get("skip")); });
  if (has("init")) spec.init = as_config("init", [&] { return parse_init_scheme(get("init")); });
  if (has("ffn_kernel")) {
    const std::size_t k = to_count("ffn_kernel", get("ffn_kernel"));
    for (auto& s : spec.stages) s.ffn_kernel = k;
  }

  if (branch == "only_global") {
    spec.local.kind = LocalKind::kNone;
    for (auto& s : spec.stages) {
      s.local_channels = 0;
      s.global_channels = s.channels;
    }
  } else if (branch == "only_local") {
    for (auto& s : spec.stages) {
      s.local_channels = s.channels;
      s.global_channels = 0;
    }
  }
  spec.validate();
  return spec;
}

std::vector<AblationRow> ablation_catalog() {
  std::vector<AblationRow> rows = {
      // Incremental construction from the global-only baseline.
      {"components", "only global branch (3x3 ffn)", {{"branch", "only_global"}, {"ffn_kernel", "3"}}},
      {"components", "3x3 -> 5x5 ffn", {{"branch", "only_global"}}},
      {"components", "+shared weights", {{"local", "shared_only"}}},
      {"components",
       "+Q*K",
       {{"local", "full"}, {"qk_dwconv", "false"}, {"gate_depth", "0"}, {"outer_act", "identity"}}},
      {"components", "+Tanh", {{"local", "full"}, {"qk_dwconv", "false"}, {"gate_depth", "0"}}},
      {"components", "+DWconv", {{"local", "full"}, {"gate_depth", "0"}}},
      {"components", "+FC", {{"local", "full"}, {"inner_act", "identity"}}},
      {"components", "+Swish (full)", {}},
      // Branch comparison.
      {"branches", "only global branch", {{"branch", "only_global"}}},
      {"branches", "only local branch", {{"branch", "only_local"}}},
      {"branches", "global + shared weights", {{"local", "shared_only"}}},
      {"branches", "global + context-aware weights", {{"local", "context_only"}}},
      {"branches", "global + full local", {}},
      // Local-perception designs.
      {"local kinds", "(a) shared_only", {{"local", "shared_only"}}},
      {"local kinds", "(b) window_attn", {{"local", "window_attn"}}},
      {"local kinds", "(c) context_only", {{"local", "context_only"}}},
      {"local kinds", "(d) window_attn_plus_shared", {{"local", "window_attn_plus_shared"}}},
      {"local kinds", "(e) full", {{"local", "full"}}},
      // Gate inputs.
      {"key", "Q and K", {{"use_k", "true"}}},
      {"key", "only Q", {{"use_k", "false"}}},
      // Gate depth.
      {"nonlinearity", "only Tanh", {{"gate_depth", "0"}}},
      {"nonlinearity", "0 extra pairs", {{"extra_pairs", "0"}}},
      {"nonlinearity", "1 extra pair", {{"extra_pairs", "1"}}},
      {"nonlinearity", "2 extra pairs", {{"extra_pairs", "2"}}},
      {"nonlinearity", "3 extra pairs", {{"extra_pairs", "3"}}},
      // Activation pairings (inner, outer).
      {"activations", "gelu + tanh", {{"inner_act", "gelu"}, {"outer_act", "tanh"}}},
      {"activations", "silu + tanh", {{"inner_act", "silu"}, {"outer_act", "tanh"}}},
      {"activations", "relu + tanh", {{"inner_act", "relu"}, {"outer_act", "tanh"}}},
      {"activations", "swish + gelu", {{"inner_act", "swish"}, {"outer_act", "gelu"}}},
      {"activations", "swish + sigmoid", {{"inner_act", "swish"}, {"outer_act", "sigmoid"}}},
      {"activations", "swish + tanh", {{"inner_act", "swish"}, {"outer_act", "tanh"}}},
      // Stem.
      {"stem", "patch embed", {{"stem", "patch_embed"}}},
      {"stem", "conv stem", {{"stem", "conv"}}},
  };
  return rows;
}

}  // namespace clo
