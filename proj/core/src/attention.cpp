// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "cloformer/error.hpp"
#include "cloformer/layers.hpp"

namespace clo {

namespace {

template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One head of attention on column-major token matrices: q/out are (tokens x
// dim), k/v are (keys x dim). `probs` receives the (tokens x keys) row-major
// softmax matrix.
template <typename T>
void attend(const T* q, const T* k, const T* v, T* out, T* probs, std::size_t tokens,
            std::size_t keys, std::size_t dim, T scale) {
  Eigen::Map<const ColMat<T>> qm(q, tokens, dim);
  Eigen::Map<const ColMat<T>> km(k, keys, dim);
  Eigen::Map<const ColMat<T>> vm(v, keys, dim);
  Eigen::Map<RowMat<T>> a(probs, tokens, keys);
  a.noalias() = scale * (qm * km.transpose());
  for (std::size_t t = 0; t < tokens; ++t) {
    T* row = probs + t * keys;
    const T peak = *std::max_element(row, row + keys);
    T total = 0;
    for (std::size_t j = 0; j < keys; ++j) total += row[j] = std::exp(row[j] - peak);
    const T inv = T(1) / total;
    for (std::size_t j = 0; j < keys; ++j) row[j] *= inv;
  }
  Eigen::Map<ColMat<T>> om(out, tokens, dim);
  om.noalias() = a * vm;
}

template <typename T>
void attend_backward(const T* q, const T* k, const T* v, const T* probs, const T* gout, T* gq,
                     T* gk, T* gv, std::size_t tokens, std::size_t keys, std::size_t dim,
                     T scale) {
  Eigen::Map<const ColMat<T>> qm(q, tokens, dim);
  Eigen::Map<const ColMat<T>> km(k, keys, dim);
  Eigen::Map<const ColMat<T>> vm(v, keys, dim);
  Eigen::Map<const RowMat<T>> a(probs, tokens, keys);
  Eigen::Map<const ColMat<T>> go(gout, tokens, dim);
  if (gv) Eigen::Map<ColMat<T>>(gv, keys, dim).noalias() += a.transpose() * go;
  if (!gq && !gk) return;
  RowMat<T> ga = go * vm.transpose();
  for (std::size_t t = 0; t < tokens; ++t) {
    T dot = 0;
    for (std::size_t j = 0; j < keys; ++j) dot += ga(t, j) * a(t, j);
    for (std::size_t j = 0; j < keys; ++j) ga(t, j) = a(t, j) * (ga(t, j) - dot) * scale;
  }
  if (gq) Eigen::Map<ColMat<T>>(gq, tokens, dim).noalias() += ga * km;
  if (gk) Eigen::Map<ColMat<T>>(gk, keys, dim).noalias() += ga.transpose() * qm;
}

}  // namespace

template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                    const BasicTensor<T>& v, std::size_t heads) {
  const auto& sq = q.shape();
  const auto& sk = k.shape();
  if (!sk.same_extents(v.shape())) {
    throw DimensionError("attention: key shape " + sk.str() + " != value shape " +
                         v.shape().str());
  }
  if (sq.n() != sk.n() || sq.c() != sk.c()) {
    throw DimensionError("attention: query " + sq.str() + " incompatible with keys " +
                         sk.str());
  }
  if (heads == 0 || sq.c() % heads != 0) {
    throw DimensionError("attention: " + std::to_string(sq.c()) +
                         " channels not divisible into " + std::to_string(heads) + " heads");
  }
  const std::size_t batch = sq.n();
  const std::size_t c = sq.c();
  const std::size_t dim = c / heads;
  const std::size_t tokens = sq.plane();
  const std::size_t keys = sk.plane();
  const T scale = T(1) / std::sqrt(static_cast<T>(dim));
  Buffer<T> out(sq.numel());
  auto probs = std::make_shared<Buffer<T>>(batch * heads * tokens * keys);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t qo = (n * c + h * dim) * tokens;
      const std::size_t ko = (n * c + h * dim) * keys;
      attend(q.data().data() + qo, k.data().data() + ko, v.data().data() + ko, out.data() + qo,
             probs->data() + (n * heads + h) * tokens * keys, tokens, keys, dim, scale);
    }
  }
  return BasicTensor<T>::from_op(
      "multi_head_attention", sq, std::move(out), {q, k, v},
      [=](const detail::BackwardArgs<T>& g) {
        auto gq = g.input_grads[0];
        auto gk = g.input_grads[1];
        auto gv = g.input_grads[2];
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t qo = (n * c + h * dim) * tokens;
            const std::size_t ko = (n * c + h * dim) * keys;
            attend_backward(q.data().data() + qo, k.data().data() + ko, v.data().data() + ko,
                            probs->data() + (n * heads + h) * tokens * keys,
                            g.grad_out.data() + qo, gq.empty() ? nullptr : gq.data() + qo,
                            gk.empty() ? nullptr : gk.data() + ko,
                            gv.empty() ? nullptr : gv.data() + ko, tokens, keys, dim, scale);
          }
        }
      });
}

namespace {

struct Window {
  std::vector<std::size_t> cells;  // flat h * W + w positions
};

std::vector<Window> tile_windows(std::size_t h, std::size_t w, std::size_t size) {
  std::vector<Window> windows;
  for (std::size_t y0 = 0; y0 < h; y0 += size) {
    for (std::size_t x0 = 0; x0 < w; x0 += size) {
      Window win;
      for (std::size_t y = y0; y < std::min(h, y0 + size); ++y)
        for (std::size_t x = x0; x < std::min(w, x0 + size); ++x) win.cells.push_back(y * w + x);
      windows.push_back(std::move(win));
    }
  }
  return windows;
}

template <typename T>
void gather(const T* src, std::size_t plane, std::size_t dim, const Window& win, T* dst) {
  const std::size_t m = win.cells.size();
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < m; ++i) dst[j * m + i] = src[j * plane + win.cells[i]];
}

template <typename T>
void scatter_add(const T* src, std::size_t plane, std::size_t dim, const Window& win, T* dst) {
  const std::size_t m = win.cells.size();
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < m; ++i) dst[j * plane + win.cells[i]] += src[j * m + i];
}

}  // namespace

template <typename T>
BasicTensor<T> window_attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                const BasicTensor<T>& v, std::size_t heads,
                                std::size_t window) {
  const auto& s = q.shape();
  if (!s.same_extents(k.shape()) || !s.same_extents(v.shape())) {
    throw DimensionError("window_attention: q/k/v shapes differ");
  }
  if (window == 0) throw ArgumentError("window_attention: window must be >= 1");
  if (heads == 0 || s.c() % heads != 0) {
    throw DimensionError("window_attention: " + std::to_string(s.c()) +
                         " channels not divisible into " + std::to_string(heads) + " heads");
  }
  const std::size_t batch = s.n();
  const std::size_t c = s.c();
  const std::size_t dim = c / heads;
  const std::size_t plane = s.plane();
  const T scale = T(1) / std::sqrt(static_cast<T>(dim));
  auto windows = std::make_shared<std::vector<Window>>(tile_windows(s.h(), s.w(), window));
  std::size_t prob_total = 0;
  std::vector<std::size_t> prob_offset;
  for (const auto& win : *windows) {
    prob_offset.push_back(prob_total);
    prob_total += win.cells.size() * win.cells.size();
  }
  auto probs = std::make_shared<Buffer<T>>(batch * heads * prob_total);
  Buffer<T> out(s.numel(), T(0));
  const std::size_t cap = window * window * dim;
  Buffer<T> bq(cap), bk(cap), bv(cap), bo(cap);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = (n * c + h * dim) * plane;
      for (std::size_t wi = 0; wi < windows->size(); ++wi) {
        const Window& win = (*windows)[wi];
        const std::size_t m = win.cells.size();
        gather(q.data().data() + off, plane, dim, win, bq.data());
        gather(k.data().data() + off, plane, dim, win, bk.data());
        gather(v.data().data() + off, plane, dim, win, bv.data());
        attend(bq.data(), bk.data(), bv.data(), bo.data(),
               probs->data() + (n * heads + h) * prob_total + prob_offset[wi], m, m, dim, scale);
        scatter_add(bo.data(), plane, dim, win, out.data() + off);
      }
    }
  }
  return BasicTensor<T>::from_op(
      "window_attention", s, std::move(out), {q, k, v},
      [=](const detail::BackwardArgs<T>& g) {
        auto gq = g.input_grads[0];
        auto gk = g.input_grads[1];
        auto gv = g.input_grads[2];
        Buffer<T> bq(cap), bk(cap), bv(cap), bg(cap), dq(cap), dk(cap), dv(cap);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = (n * c + h * dim) * plane;
            for (std::size_t wi = 0; wi < windows->size(); ++wi) {
              const Window& win = (*windows)[wi];
              const std::size_t m = win.cells.size();
              gather(q.data().data() + off, plane, dim, win, bq.data());
              gather(k.data().data() + off, plane, dim, win, bk.data());
              gather(v.data().data() + off, plane, dim, win, bv.data());
              gather(g.grad_out.data() + off, plane, dim, win, bg.data());
              std::fill(dq.begin(), dq.end(), T(0));
              std::fill(dk.begin(), dk.end(), T(0));
              std::fill(dv.begin(), dv.end(), T(0));
              attend_backward(bq.data(), bk.data(), bv.data(),
                              probs->data() + (n * heads + h) * prob_total + prob_offset[wi],
                              bg.data(), dq.data(), dk.data(), dv.data(), m, m, dim, scale);
              if (!gq.empty()) scatter_add(dq.data(), plane, dim, win, gq.data() + off);
              if (!gk.empty()) scatter_add(dk.data(), plane, dim, win, gk.data() + off);
              if (!gv.empty()) scatter_add(dv.data(), plane, dim, win, gv.data() + off);
            }
          }
        }
      });
}

template BasicTensor<float> multi_head_attention(const BasicTensor<float>&,
                                                 const BasicTensor<float>&,
                                                 const BasicTensor<float>&, std::size_t);
template BasicTensor<double> multi_head_attention(const BasicTensor<double>&,
                                                  const BasicTensor<double>&,
                                                  const BasicTensor<double>&, std::size_t);
template BasicTensor<float> window_attention(const BasicTensor<float>&,
                                             const BasicTensor<float>&,
                                             const BasicTensor<float>&, std::size_t,
                                             std::size_t);
template BasicTensor<double> window_attention(const BasicTensor<double>&,
                                              const BasicTensor<double>&,
                                              const BasicTensor<double>&, std::size_t,
                                              std::size_t);

}  // namespace clo
