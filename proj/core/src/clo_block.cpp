// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/clo_block.hpp"

#include <string>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"

namespace clo {

namespace {

template <typename T>
BasicTensor<T> residual_branch(const BasicTensor<T>& branch, double rate,
                               const ForwardContext& ctx) {
  if (!ctx.training || rate <= 0.0) return branch;
  if (!ctx.rng) throw ArgumentError("drop-path in training mode needs an rng");
  return drop_path(branch, rate, *ctx.rng, true);
}

}  // namespace

template <typename T>
std::size_t CloBlockParams<T>::qkv_width() const {
  const LocalInputs in = local_reads();
  return 3 * global_channels + local_channels * (std::size_t(in.q) + in.k + in.v);
}

template <typename T>
CloBlockParams<T> make_clo_block(const StageSpec& stage, const LocalConfig& local, double drop_rate,
                                 Rng& rng) {
  CloBlockParams<T> p;
  p.channels = stage.channels;
  p.local_channels = stage.local_channels;
  p.global_channels = stage.global_channels;
  p.head_dim = stage.head_dim();
  p.pool_stride = stage.pool_stride;
  p.drop_rate = drop_rate;
  p.norm_gain = BasicTensor<T>::full(Shape{stage.channels}, T(1));
  p.norm_offset = BasicTensor<T>::zeros(Shape{stage.channels});
  if (stage.local_channels > 0) {
    p.local = make_attnconv<T>(stage.local_channels, stage.attn_kernel, p.head_dim, local, rng);
  }
  p.qkv = make_linear<T>(stage.channels, p.qkv_width(), true, rng);
  p.fuse = make_linear<T>(stage.channels, stage.channels, true, rng);
  return p;
}

template <typename T>
ConvFFNParams<T> make_convffn(std::size_t channels, std::size_t next_channels, std::size_t ratio,
                              std::size_t kernel, SkipConv skip, double drop_rate, Rng& rng) {
  const bool cross = next_channels > 0;
  const std::size_t hidden = channels * ratio;
  ConvFFNParams<T> p;
  p.drop_rate = drop_rate;
  p.norm_gain = BasicTensor<T>::full(Shape{channels}, T(1));
  p.norm_offset = BasicTensor<T>::zeros(Shape{channels});
  p.fc_in = make_linear<T>(channels, hidden, true, rng);
  p.dw = make_dwconv<T>(hidden, kernel, cross ? 2 : 1, true, rng);
  p.fc_out = make_linear<T>(hidden, cross ? next_channels : channels, true, rng);
  if (cross) {
    p.skip_conv = skip == SkipConv::kDense
                      ? make_conv<T>(channels, channels, kernel, 2, (kernel - 1) / 2, true, rng)
                      : make_dwconv<T>(channels, kernel, 2, true, rng);
    p.skip_fc = make_linear<T>(channels, next_channels, true, rng);
  }
  return p;
}

template <typename T>
BasicTensor<T> global_branch_forward(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                     const BasicTensor<T>& v, std::size_t stride,
                                     std::size_t heads) {
  if (!q.shape().same_extents(k.shape()) || !q.shape().same_extents(v.shape())) {
    throw DimensionError("global_branch_forward: q/k/v shapes " + q.shape().str() + ", " +
                         k.shape().str() + ", " + v.shape().str() + " differ");
  }
  if (stride == 0) throw ArgumentError("global_branch_forward: stride must be >= 1");
  return multi_head_attention(q, avg_pool2d(k, stride), avg_pool2d(v, stride), heads);
}

template <typename T>
BasicTensor<T> clo_block_forward(const BasicTensor<T>& x, const CloBlockParams<T>& p,
                                 const ForwardContext& ctx, BlockTaps<T>* taps) {
  if (x.shape().c() != p.channels) {
    throw DimensionError("clo_block_forward: input has " + std::to_string(x.shape().c()) +
                         " channels, block expects " + std::to_string(p.channels));
  }
  const BasicTensor<T> h = layer_norm_channels(x, p.norm_gain, p.norm_offset);
  const BasicTensor<T> qkv = fully_connected(h, p.qkv);
  const LocalInputs in = p.local_reads();
  const std::size_t cl = p.local_channels;
  const std::size_t cg = p.global_channels;

  std::size_t at = 0;
  auto take = [&](std::size_t width) {
    if (width == 0) return BasicTensor<T>();
    BasicTensor<T> part = width == qkv.shape().c() ? qkv : slice_channels(qkv, at, at + width);
    at += width;
    return part;
  };
  const BasicTensor<T> q_l = take(in.q ? cl : 0);
  const BasicTensor<T> q_g = take(cg);
  const BasicTensor<T> k_l = take(in.k ? cl : 0);
  const BasicTensor<T> k_g = take(cg);
  const BasicTensor<T> v_l = take(in.v ? cl : 0);
  const BasicTensor<T> v_g = take(cg);

  BasicTensor<T> mixed;
  if (p.local) {
    LocalTaps<T> local_taps;
    mixed = local_branch_forward(q_l, k_l, v_l, *p.local, taps ? &local_taps : nullptr);
    if (taps) {
      taps->shared = local_taps.shared;
      taps->local = mixed;
    }
  }
  if (cg > 0) {
    BasicTensor<T> global = global_branch_forward(q_g, k_g, v_g, p.pool_stride, p.global_heads());
    if (taps) taps->global = global;
    mixed = mixed.defined() ? concat_channels(mixed, global) : global;
  }
  if (!mixed.defined()) throw ConfigurationError("clo block has neither branch");
  return add(x, residual_branch(fully_connected(mixed, p.fuse), p.drop_rate, ctx));
}

template <typename T>
BasicTensor<T> convffn_forward(const BasicTensor<T>& x, const ConvFFNParams<T>& p,
                               const ForwardContext& ctx) {
  const bool cross = p.variant() == FfnVariant::kCrossStage;
  if (cross && (x.shape().h() % 2 != 0 || x.shape().w() % 2 != 0)) {
    throw DimensionError("convffn_forward: cross-stage input " + x.shape().str() +
                         " has odd spatial extents");
  }
  BasicTensor<T> h = layer_norm_channels(x, p.norm_gain, p.norm_offset);
  h = activation(Activation::kGelu, fully_connected(h, p.fc_in));
  h = fully_connected(dwconv2d(h, p.dw), p.fc_out);
  h = residual_branch(h, p.drop_rate, ctx);
  if (!cross) return add(x, h);
  const Conv2dParams<T>& sc = *p.skip_conv;
  const BasicTensor<T> down = sc.groups == 1 ? conv2d(x, sc) : dwconv2d(x, sc);
  return add(fully_connected(down, *p.skip_fc), h);
}

template <typename T>
BasicTensor<T> convffn_forward(const BasicTensor<T>& x, const ConvFFNParams<T>& p,
                               FfnVariant variant, const ForwardContext& ctx) {
  if (p.variant() != variant) {
    throw ArgumentError(std::string("convffn_forward: parameters are ") +
                        (p.variant() == FfnVariant::kCrossStage ? "cross-stage" : "in-stage") +
                        ", requested the other form");
  }
  return convffn_forward(x, p, ctx);
}

#define CLO_INSTANTIATE_BLOCK(T)                                                               \
  template struct CloBlockParams<T>;                                                           \
  template CloBlockParams<T> make_clo_block(const StageSpec&, const LocalConfig&, double, Rng&); \
  template ConvFFNParams<T> make_convffn(std::size_t, std::size_t, std::size_t, std::size_t,   \
                                         SkipConv, double, Rng&);                              \
  template BasicTensor<T> global_branch_forward(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                                const BasicTensor<T>&, std::size_t,            \
                                                std::size_t);                                  \
  template BasicTensor<T> clo_block_forward(const BasicTensor<T>&, const CloBlockParams<T>&,   \
                                            const ForwardContext&, BlockTaps<T>*);             \
  template BasicTensor<T> convffn_forward(const BasicTensor<T>&, const ConvFFNParams<T>&,      \
                                          const ForwardContext&);                              \
  template BasicTensor<T> convffn_forward(const BasicTensor<T>&, const ConvFFNParams<T>&,      \
                                          FfnVariant, const ForwardContext&);

CLO_INSTANTIATE_BLOCK(float)
CLO_INSTANTIATE_BLOCK(double)

}  // namespace clo
