// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "cloformer/error.hpp"

namespace clo {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kDimension:
      return "dimension";
    case ErrorCategory::kArgument:
      return "argument";
    case ErrorCategory::kNumeric:
      return "numeric";
    case ErrorCategory::kConfiguration:
      return "configuration";
    case ErrorCategory::kFormat:
      return "format";
    case ErrorCategory::kIo:
      return "io";
  }
  return "unknown";
}

Shape::Shape(std::initializer_list<std::size_t> extents) {
  if (extents.size() > 4) throw DimensionError("rank exceeds 4");
  std::size_t i = 0;
  for (std::size_t e : extents) {
    if (e == 0) throw DimensionError("zero extent in shape");
    dims_[i++] = e;
  }
  rank_ = static_cast<int>(extents.size());
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  const int shown = rank_ == 0 ? 0 : rank_;
  for (int i = 0; i < shown; ++i) {
    if (i) os << ',';
    os << dims_[static_cast<std::size_t>(i)];
  }
  os << ')';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool enabled) { g_grad_enabled = enabled; }

template <typename T>
BasicTensor<T>::BasicTensor(const Shape& shape)
    : impl_(std::make_shared<detail::TensorImpl<T>>()) {
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), T(0));
}

template <typename T>
BasicTensor<T>::BasicTensor(const Shape& shape, Buffer<T> values)
    : impl_(std::make_shared<detail::TensorImpl<T>>()) {
  if (values.size() != shape.numel()) {
    throw DimensionError("tensor of shape " + shape.str() + " needs " +
                         std::to_string(shape.numel()) + " values, got " +
                         std::to_string(values.size()));
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(const Shape& shape, T value) {
  return BasicTensor(shape, Buffer<T>(shape.numel(), value));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_op(const char* op, const Shape& shape,
                                       Buffer<T> values,
                                       std::initializer_list<BasicTensor> inputs,
                                       detail::BackwardFn<T> backward) {
  return from_op(op, shape, std::move(values), std::vector<BasicTensor>(inputs),
                 std::move(backward));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_op(const char* op, const Shape& shape,
                                       Buffer<T> values,
                                       const std::vector<BasicTensor>& inputs,
                                       detail::BackwardFn<T> backward) {
  BasicTensor out(shape, std::move(values));
  if (!GradMode::enabled()) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const BasicTensor& t) { return t.requires_grad(); });
  if (!any) return out;
  auto node = std::make_unique<detail::GradNode<T>>();
  node->op = op;
  node->inputs.reserve(inputs.size());
  for (const auto& t : inputs) node->inputs.push_back(t.impl_);
  node->backward = std::move(backward);
  out.impl_->requires_grad = true;
  out.impl_->node = std::move(node);
  return out;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  if (!impl_) throw ArgumentError("use of an undefined tensor");
  return impl_->shape;
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const& {
  if (!impl_) throw ArgumentError("use of an undefined tensor");
  return impl_->data;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() & {
  if (!impl_) throw ArgumentError("use of an undefined tensor");
  if (impl_->node) throw ArgumentError("mutable_data() on a non-leaf tensor");
  return impl_->data;
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape().str());
  }
  return impl_->data[0];
}

template <typename T>
T BasicTensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  const auto& d = shape().dims();
  if (n >= d[0] || c >= d[1] || h >= d[2] || w >= d[3]) {
    throw DimensionError("index out of range for shape " + shape().str());
  }
  return impl_->data[((n * d[1] + c) * d[2] + h) * d[3] + w];
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool value) {
  if (!impl_) throw ArgumentError("use of an undefined tensor");
  if (!value && impl_->node) throw ArgumentError("cannot clear requires_grad on a non-leaf");
  impl_->requires_grad = value;
  return *this;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::grad() const {
  if (!impl_) throw ArgumentError("use of an undefined tensor");
  if (impl_->grad.empty()) return BasicTensor(impl_->shape);
  return BasicTensor(impl_->shape, impl_->grad);
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  if (impl_) impl_->grad.clear();
}

template <typename T>
void BasicTensor<T>::backward() const {
  if (!impl_) throw ArgumentError("backward() on an undefined tensor");
  if (!impl_->requires_grad) {
    throw ArgumentError("backward() on a tensor that does not require grad");
  }
  using Impl = detail::TensorImpl<T>;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Impl*> order;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->node && next < node->node->inputs.size()) {
      Impl* child = node->node->inputs[next++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  auto seed = impl_->grad_buffer();
  std::fill(seed.begin(), seed.end(), T(1));

  std::vector<std::span<T>> input_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* node = *it;
    if (!node->node || node->grad.empty()) continue;
    auto& inputs = node->node->inputs;
    input_grads.assign(inputs.size(), std::span<T>());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i]->requires_grad) input_grads[i] = inputs[i]->grad_buffer();
    }
    detail::BackwardArgs<T> args{node->grad, node->data, input_grads};
    node->node->backward(args);
  }

  // Release the tape: intermediate results drop their history and gradients.
  for (Impl* node : order) {
    if (node->node) {
      node->node.reset();
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  BasicTensor out;
  out.impl_ = std::make_shared<detail::TensorImpl<T>>();
  out.impl_->shape = shape();
  out.impl_->data = impl_->data;
  return out;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  return detach();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshape(const Shape& new_shape) const {
  if (new_shape.numel() != numel()) {
    throw DimensionError("cannot reshape " + shape().str() + " to " + new_shape.str());
  }
  return from_op("reshape", new_shape, impl_->data, {*this},
                 [](const detail::BackwardArgs<T>& a) {
                   auto g = a.input_grads[0];
                   for (std::size_t i = 0; i < g.size(); ++i) g[i] += a.grad_out[i];
                 });
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace clo
