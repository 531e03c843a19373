// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/model.hpp"

#include <cmath>
#include <string>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"

namespace clo {

namespace {

template <typename T>
NormParams<T> make_norm(std::size_t channels) {
  return {BasicTensor<T>::full(Shape{channels}, T(1)), BasicTensor<T>::zeros(Shape{channels})};
}

template <typename T>
struct Namer {
  std::vector<NamedParam<T>>& out;

  void tensor(const std::string& name, const BasicTensor<T>& t) {
    if (t.defined()) out.push_back({name, t});
  }
  void linear(const std::string& prefix, const LinearParams<T>& p) {
    tensor(prefix + ".weight", p.weight);
    tensor(prefix + ".bias", p.bias);
  }
  void conv(const std::string& prefix, const Conv2dParams<T>& p) {
    tensor(prefix + ".weight", p.weight);
    tensor(prefix + ".bias", p.bias);
  }
  void norm(const std::string& prefix, const BasicTensor<T>& gain, const BasicTensor<T>& offset) {
    tensor(prefix + ".gain", gain);
    tensor(prefix + ".offset", offset);
  }
};

template <typename T>
void check_finite(const BasicTensor<T>& x, const std::string& where) {
  if (!all_finite(x)) throw NumericError("non-finite activations at " + where);
}

}  // namespace

template <typename T>
std::vector<NamedParam<T>> BasicModel<T>::named_parameters() const {
  std::vector<NamedParam<T>> out;
  Namer<T> n{out};
  for (std::size_t i = 0; i < stem.convs.size(); ++i) {
    n.conv("stem.conv" + std::to_string(i), stem.convs[i]);
    if (i < stem.norms.size()) {
      n.norm("stem.norm" + std::to_string(i), stem.norms[i].gain, stem.norms[i].offset);
    }
  }
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string stage = "stage" + std::to_string(s + 1);
    for (std::size_t j = 0; j < stages[s].blocks.size(); ++j) {
      const std::string block = stage + ".block" + std::to_string(j);
      const CloBlockParams<T>& b = stages[s].blocks[j];
      n.norm(block + ".norm1", b.norm_gain, b.norm_offset);
      n.linear(block + ".qkv", b.qkv);
      if (b.local) {
        const AttnConvParams<T>& l = *b.local;
        if (l.dw_q) n.conv(block + ".local.dw_q", *l.dw_q);
        if (l.dw_k) n.conv(block + ".local.dw_k", *l.dw_k);
        if (l.dw_v) n.conv(block + ".local.dw_v", *l.dw_v);
        for (std::size_t f = 0; f < l.fcs.size(); ++f)
          n.linear(block + ".local.fc" + std::to_string(f + 1), l.fcs[f]);
      }
      n.linear(block + ".fuse", b.fuse);
      const ConvFFNParams<T>& f = stages[s].ffns[j];
      n.norm(block + ".norm2", f.norm_gain, f.norm_offset);
      const std::string ffn = stage + ".ffn" + std::to_string(j);
      n.linear(ffn + ".fc_in", f.fc_in);
      n.conv(ffn + ".dw", f.dw);
      n.linear(ffn + ".fc_out", f.fc_out);
      if (f.skip_conv) n.conv(ffn + ".skip_conv", *f.skip_conv);
      if (f.skip_fc) n.linear(ffn + ".skip_fc", *f.skip_fc);
    }
  }
  n.linear("head", head);
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> BasicModel<T>::parameters() const {
  std::vector<BasicTensor<T>> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

template <typename T>
BasicModel<T> build_model(const VariantSpec& spec, Rng& rng) {
  spec.validate();
  BasicModel<T> m;
  m.spec = spec;
  const std::size_t c1 = spec.stages[0].channels;
  m.stem.kind = spec.stem;
  if (spec.stem == StemKind::kConv) {
    const std::size_t mid = spec.stem_channels;
    m.stem.convs.push_back(make_conv<T>(3, mid, 3, 2, 1, true, rng));
    m.stem.norms.push_back(make_norm<T>(mid));
    m.stem.convs.push_back(make_conv<T>(mid, c1, 3, 2, 1, true, rng));
    m.stem.norms.push_back(make_norm<T>(c1));
    for (int i = 0; i < 2; ++i) {
      m.stem.convs.push_back(make_conv<T>(c1, c1, 3, 1, 1, true, rng));
      m.stem.norms.push_back(make_norm<T>(c1));
    }
    m.stem.convs.push_back(make_conv<T>(c1, c1, 1, 1, 0, true, rng));
  } else {
    m.stem.convs.push_back(make_conv<T>(3, c1, 4, 4, 0, true, rng));
    m.stem.norms.push_back(make_norm<T>(c1));
  }

  const std::size_t total = spec.total_blocks();
  std::size_t depth = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    const StageSpec& st = spec.stages[s];
    for (std::size_t j = 0; j < st.blocks; ++j, ++depth) {
      const double rate =
          total > 1 ? spec.drop_path_max * static_cast<double>(depth) / double(total - 1) : 0.0;
      m.stages[s].blocks.push_back(make_clo_block<T>(st, spec.local, rate, rng));
      const bool cross = s < 3 && j + 1 == st.blocks;
      m.stages[s].ffns.push_back(make_convffn<T>(st.channels,
                                                 cross ? spec.stages[s + 1].channels : 0,
                                                 st.ffn_ratio, st.ffn_kernel, spec.skip, rate, rng));
    }
  }
  m.head = make_linear<T>(spec.stages[3].channels, spec.num_classes, true, rng);
  if (spec.init == InitScheme::kFanIn) {
    for (const auto& p : m.named_parameters()) {
      const Shape& s = p.tensor.shape();
      if (s.rank() < 2) continue;
      const double fan_in = double(p.tensor.numel() / s.extent(0));
      const T factor = static_cast<T>(1.0 / (std::sqrt(fan_in) * kInitStddev));
      BasicTensor<T> w = p.tensor;
      for (T& v : w.mutable_data()) v *= factor;
    }
  }
  return m;
}

template <typename T>
void set_block_padding(BasicModel<T>& m, PadMode mode) {
  for (auto& stage : m.stages)
    for (auto& b : stage.blocks)
      if (b.local) set_pad_mode(*b.local, mode);
}

template <typename T>
BasicTensor<T> conv_stem(const BasicTensor<T>& x, const BasicModel<T>& m) {
  const Shape& s = x.shape();
  if (s.c() != 3) {
    throw DimensionError("conv_stem: expected 3 input channels, got " + s.str());
  }
  if (s.h() % 32 != 0 || s.w() % 32 != 0) {
    throw DimensionError("conv_stem: spatial extents of " + s.str() + " not divisible by 32");
  }
  BasicTensor<T> h = x;
  for (std::size_t i = 0; i < m.stem.convs.size(); ++i) {
    h = conv2d(h, m.stem.convs[i]);
    if (i < m.stem.norms.size()) {
      h = layer_norm_channels(h, m.stem.norms[i].gain, m.stem.norms[i].offset);
      if (m.stem.kind == StemKind::kConv) h = activation(Activation::kGelu, h);
    }
  }
  return h;
}

template <typename T>
ForwardResult<T> model_forward(const BasicTensor<T>& x, const BasicModel<T>& m,
                               const ForwardOptions& options) {
  if (options.tap_stage < 0 || options.tap_stage > 4) {
    throw ArgumentError("model_forward: tap stage must be 0..4");
  }
  ForwardResult<T> result;
  const ForwardContext ctx{options.training, options.rng};
  BasicTensor<T> h = conv_stem(x, m);
  check_finite(h, "stem");
  for (std::size_t s = 0; s < 4; ++s) {
    const StageParams<T>& stage = m.stages[s];
    const std::string where = "stage" + std::to_string(s + 1);
    for (std::size_t j = 0; j < stage.blocks.size(); ++j) {
      const bool tap = options.tap_stage == int(s + 1) && j + 1 == stage.blocks.size();
      h = clo_block_forward(h, stage.blocks[j], ctx, tap ? &result.taps : nullptr);
      check_finite(h, where + ".block" + std::to_string(j));
      if (options.want_features && stage.ffns[j].variant() == FfnVariant::kCrossStage) {
        result.features.push_back(h);
      }
      h = convffn_forward(h, stage.ffns[j], ctx);
      check_finite(h, where + ".ffn" + std::to_string(j));
    }
  }
  if (options.want_features) result.features.push_back(h);
  const BasicTensor<T> logits = fully_connected(global_avg_pool(h), m.head);
  result.logits = logits.reshape(Shape{logits.shape().n(), logits.shape().c()});
  check_finite(result.logits, "head");
  return result;
}

#define CLO_INSTANTIATE_MODEL(T)                                                          \
  template struct BasicModel<T>;                                                          \
  template BasicModel<T> build_model(const VariantSpec&, Rng&);                           \
  template void set_block_padding(BasicModel<T>&, PadMode);                               \
  template BasicTensor<T> conv_stem(const BasicTensor<T>&, const BasicModel<T>&);         \
  template ForwardResult<T> model_forward(const BasicTensor<T>&, const BasicModel<T>&,    \
                                          const ForwardOptions&);

CLO_INSTANTIATE_MODEL(float)
CLO_INSTANTIATE_MODEL(double)

}  // namespace clo
