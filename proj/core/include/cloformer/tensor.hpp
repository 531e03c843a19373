// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace clo {

/// Extents of a rank <= 4 tensor. Lower ranks are embedded by padding the
/// trailing extents with 1, so a rank-2 (N, K) tensor is laid out exactly
/// like an (N, K, 1, 1) NCHW tensor.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> extents);

  static Shape nchw(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return Shape{n, c, h, w};
  }
  static Shape scalar() { return Shape{}; }

  int rank() const { return rank_; }
  std::size_t extent(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  const std::array<std::size_t, 4>& dims() const { return dims_; }

  std::size_t n() const { return dims_[0]; }
  std::size_t c() const { return dims_[1]; }
  std::size_t h() const { return dims_[2]; }
  std::size_t w() const { return dims_[3]; }
  std::size_t plane() const { return dims_[2] * dims_[3]; }
  std::size_t numel() const { return dims_[0] * dims_[1] * dims_[2] * dims_[3]; }

  /// Same NCHW extents, ignoring the declared rank.
  bool same_extents(const Shape& other) const { return dims_ == other.dims_; }

  bool operator==(const Shape& other) const = default;

  std::string str() const;

 private:
  std::array<std::size_t, 4> dims_{1, 1, 1, 1};
  int rank_ = 0;
};

template <typename T>
class BasicTensor;

namespace detail {

/// Storage is 64-byte aligned so vectorized kernels see the same alignment,
/// and therefore the same summation order, on every run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

}  // namespace detail

template <typename T>
using Buffer = std::vector<T, detail::AlignedAllocator<T>>;

namespace detail {

template <typename T>
struct TensorImpl;

template <typename T>
struct BackwardArgs {
  std::span<const T> grad_out;
  std::span<const T> out;
  /// One entry per recorded input; empty when that input needs no gradient.
  std::span<const std::span<T>> input_grads;
};

template <typename T>
using BackwardFn = std::function<void(const BackwardArgs<T>&)>;

template <typename T>
struct GradNode {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  BackwardFn<T> backward;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  Buffer<T> data;
  Buffer<T> grad;
  bool requires_grad = false;
  std::unique_ptr<GradNode<T>> node;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Gradient recording switch for the calling thread. Recording is on by
/// default; NoGradGuard turns it off for a scope.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense NCHW tensor of T (float or double) with reverse-mode differentiation.
///
/// A tensor is a handle to shared, immutable storage. Operations never modify
/// their inputs; they return a new tensor and, when any input requires a
/// gradient, record a node linking the result back to its inputs. Calling
/// backward() on a scalar result walks that tape in reverse topological order
/// and accumulates gradients into every leaf that requires one.
///
/// The only sanctioned mutation is through mutable_data() on leaf tensors
/// (optimizer updates, checkpoint loading), which must not happen while a
/// recorded graph that reads the leaf is still awaiting backward().
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(const Shape& shape);
  BasicTensor(const Shape& shape, Buffer<T> values);
  BasicTensor(const Shape& shape, std::initializer_list<T> values)
      : BasicTensor(shape, Buffer<T>(values)) {}
  BasicTensor(const Shape& shape, const std::vector<T>& values)
      : BasicTensor(shape, Buffer<T>(values.begin(), values.end())) {}

  static BasicTensor zeros(const Shape& shape) { return BasicTensor(shape); }
  static BasicTensor full(const Shape& shape, T value);
  static BasicTensor scalar(T value) { return full(Shape::scalar(), value); }

  /// Builds an operation result. `inputs` are recorded for differentiation
  /// only if gradient recording is enabled and one of them requires a grad.
  static BasicTensor from_op(const char* op, const Shape& shape, Buffer<T> values,
                             std::initializer_list<BasicTensor> inputs,
                             detail::BackwardFn<T> backward);
  static BasicTensor from_op(const char* op, const Shape& shape, Buffer<T> values,
                             const std::vector<BasicTensor>& inputs,
                             detail::BackwardFn<T> backward);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const T> data() const&;
  std::span<const T> data() const&& = delete;
  std::span<T> mutable_data() &;
  std::span<T> mutable_data() && = delete;
  T item() const;
  T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  BasicTensor& set_requires_grad(bool value);
  bool is_leaf() const { return !impl_ || impl_->node == nullptr; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  /// Accumulated gradient; zeros if nothing has been accumulated yet.
  BasicTensor grad() const;
  void zero_grad();

  /// Reverse-mode pass seeded with ones. Frees the recorded graph afterwards.
  void backward() const;

  /// Same values, no gradient history, no grad requirement.
  BasicTensor detach() const;
  /// Deep copy of the values, detached.
  BasicTensor clone() const;
  /// Same values reinterpreted with new extents (numel must match).
  BasicTensor reshape(const Shape& shape) const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data().begin(), data().end());
    return BasicTensor<U>(shape(), std::move(out));
  }

  const void* identity() const { return impl_.get(); }

 private:
  template <typename U>
  friend class BasicTensor;

  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace clo
