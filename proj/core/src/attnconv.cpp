// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/attnconv.hpp"

#include <cmath>
#include <string>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"

namespace clo {

namespace {

bool is_gated(LocalKind kind) { return kind == LocalKind::kContextOnly || kind == LocalKind::kFull; }
bool is_window(LocalKind kind) {
  return kind == LocalKind::kWindowAttn || kind == LocalKind::kWindowAttnPlusShared;
}
bool has_shared(LocalKind kind) {
  return kind == LocalKind::kSharedOnly || kind == LocalKind::kWindowAttnPlusShared ||
         kind == LocalKind::kFull;
}

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (!a.defined() || !b.defined() || !a.shape().same_extents(b.shape())) {
    throw DimensionError(std::string(what) + ": shape " +
                         (a.defined() ? a.shape().str() : std::string("<undefined>")) + " != " +
                         (b.defined() ? b.shape().str() : std::string("<undefined>")));
  }
}

template <typename T>
BasicTensor<T> shared_of(const BasicTensor<T>& v, const AttnConvParams<T>& p) {
  if (!p.dw_v) throw ConfigurationError("local branch has no dw_v");
  return dwconv2d(v, *p.dw_v);
}

template <typename T>
BasicTensor<T> record(LocalTaps<T>* taps, BasicTensor<T> out) {
  if (taps) taps->output = out;
  return out;
}

}  // namespace

LocalInputs local_inputs(const LocalConfig& config) {
  LocalInputs in;
  if (config.kind == LocalKind::kNone) return in;
  in.v = true;
  in.q = is_gated(config.kind) || is_window(config.kind);
  in.k = is_window(config.kind) || (is_gated(config.kind) && config.use_k);
  return in;
}

template <typename T>
AttnConvParams<T> make_attnconv(std::size_t channels, std::size_t kernel, std::size_t head_dim,
                                const LocalConfig& config, Rng& rng) {
  if (config.kind == LocalKind::kNone) throw ArgumentError("make_attnconv: local kind none");
  if (channels == 0 || head_dim == 0 || channels % head_dim != 0) {
    throw ArgumentError("make_attnconv: " + std::to_string(channels) +
                        " channels not a multiple of head_dim " + std::to_string(head_dim));
  }
  AttnConvParams<T> p;
  p.config = config;
  p.channels = channels;
  p.kernel = kernel;
  p.head_dim = head_dim;
  if (is_gated(config.kind)) {
    if (config.qk_dwconv) {
      p.dw_q = make_dwconv<T>(channels, kernel, 1, true, rng);
      if (config.use_k) p.dw_k = make_dwconv<T>(channels, kernel, 1, true, rng);
    }
  }
  if (has_shared(config.kind)) p.dw_v = make_dwconv<T>(channels, kernel, 1, true, rng);
  if (is_gated(config.kind) && config.gate_depth > 0) {
    for (int i = 0; i <= config.gate_depth; ++i)
      p.fcs.push_back(make_linear<T>(channels, channels, true, rng));
  }
  return p;
}

template <typename T>
void set_pad_mode(AttnConvParams<T>& p, PadMode mode) {
  for (auto* dw : {&p.dw_q, &p.dw_k, &p.dw_v})
    if (*dw) (*dw)->pad_mode = mode;
}

template <typename T>
BasicTensor<T> gen_context_weights(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                   const AttnConvParams<T>& p) {
  const LocalConfig& cfg = p.config;
  if (cfg.use_k) require_same(q, k, "gen_context_weights");
  if (!q.defined()) throw DimensionError("gen_context_weights: q undefined");
  if (q.shape().c() != p.channels) {
    throw DimensionError("gen_context_weights: q has " + std::to_string(q.shape().c()) +
                         " channels, parameters expect " + std::to_string(p.channels));
  }
  const T beta = static_cast<T>(cfg.swish_beta);
  BasicTensor<T> t = p.dw_q ? dwconv2d(q, *p.dw_q) : q;
  if (cfg.use_k) t = hadamard(t, p.dw_k ? dwconv2d(k, *p.dw_k) : k);
  for (std::size_t i = 0; i < p.fcs.size(); ++i) {
    t = fully_connected(t, p.fcs[i]);
    if (i + 1 < p.fcs.size()) t = activation(cfg.inner, t, beta);
  }
  t = scale(t, T(1) / std::sqrt(static_cast<T>(p.head_dim)));
  return activation(cfg.outer, t, beta);
}

template <typename T>
BasicTensor<T> attnconv_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                const BasicTensor<T>& v, const AttnConvParams<T>& p) {
  require_same(q, v, "attnconv_forward");
  return hadamard(gen_context_weights(q, k, p), shared_of(v, p));
}

template <typename T>
LocalOperator<T> build_local_ablation(LocalKind kind) {
  using Tn = BasicTensor<T>;
  switch (kind) {
    case LocalKind::kSharedOnly:
      return [](const Tn&, const Tn&, const Tn& v, const AttnConvParams<T>& p, LocalTaps<T>* taps) {
        Tn shared = shared_of(v, p);
        if (taps) taps->shared = shared;
        return record(taps, shared);
      };
    case LocalKind::kContextOnly:
      return [](const Tn& q, const Tn& k, const Tn& v, const AttnConvParams<T>& p,
                LocalTaps<T>* taps) {
        require_same(q, v, "context_only");
        return record(taps, hadamard(gen_context_weights(q, k, p), v));
      };
    case LocalKind::kWindowAttn:
      return [](const Tn& q, const Tn& k, const Tn& v, const AttnConvParams<T>& p,
                LocalTaps<T>* taps) {
        return record(taps, window_attention(q, k, v, p.heads(), p.kernel));
      };
    case LocalKind::kWindowAttnPlusShared:
      return [](const Tn& q, const Tn& k, const Tn& v, const AttnConvParams<T>& p,
                LocalTaps<T>* taps) {
        Tn shared = shared_of(v, p);
        if (taps) taps->shared = shared;
        return record(taps, window_attention(q, k, shared, p.heads(), p.kernel));
      };
    case LocalKind::kFull:
      return [](const Tn& q, const Tn& k, const Tn& v, const AttnConvParams<T>& p,
                LocalTaps<T>* taps) {
        require_same(q, v, "attnconv_forward");
        Tn shared = shared_of(v, p);
        if (taps) taps->shared = shared;
        return record(taps, hadamard(gen_context_weights(q, k, p), shared));
      };
    case LocalKind::kNone:
      break;
  }
  throw ArgumentError("build_local_ablation: unknown local kind '" +
                      std::string(local_kind_name(kind)) + "'");
}

template <typename T>
BasicTensor<T> local_branch_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                    const BasicTensor<T>& v, const AttnConvParams<T>& p,
                                    LocalTaps<T>* taps) {
  return build_local_ablation<T>(p.config.kind)(q, k, v, p, taps);
}

#define CLO_INSTANTIATE_ATTNCONV(T)                                                           \
  template AttnConvParams<T> make_attnconv(std::size_t, std::size_t, std::size_t,             \
                                           const LocalConfig&, Rng&);                         \
  template void set_pad_mode(AttnConvParams<T>&, PadMode);                                    \
  template BasicTensor<T> gen_context_weights(const BasicTensor<T>&, const BasicTensor<T>&,   \
                                              const AttnConvParams<T>&);                      \
  template BasicTensor<T> attnconv_forward(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                           const BasicTensor<T>&, const AttnConvParams<T>&);  \
  template LocalOperator<T> build_local_ablation<T>(LocalKind);                               \
  template BasicTensor<T> local_branch_forward(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                               const BasicTensor<T>&, const AttnConvParams<T>&, \
                                               LocalTaps<T>*);

CLO_INSTANTIATE_ATTNCONV(float)
CLO_INSTANTIATE_ATTNCONV(double)

}  // namespace clo
