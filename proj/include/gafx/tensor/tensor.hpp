// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gafx/error.hpp"

namespace gafx {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

const char* dtype_name(DType dtype);

// Gradient recording is on by default; a NoGradGuard turns it off for the
// current thread until it goes out of scope.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor;

namespace detail {

std::uint64_t next_sequence();

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Receives this node's gradient and accumulates into the parents.
  std::function<void(const std::vector<T>&)> backward;

  bool is_leaf() const { return !backward; }
  std::vector<T>& grad_ref() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

// Returns the gradient buffer of `node` if it participates in
// differentiation, nullptr otherwise.
template <typename T>
std::vector<T>* grad_sink(const std::shared_ptr<Node<T>>& node) {
  if (!node || !node->requires_grad) return nullptr;
  return &node->grad_ref();
}

}  // namespace detail

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }
  DType dtype() const { return dtype_of<T>(); }

  std::span<const T> data() const { return node_->data; }
  // Direct write access; used by initializers, optimizers and probes.
  std::span<T> mutable_data() { return node_->data; }
  T operator[](std::size_t flat) const { return node_->data[flat]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const { return node_->is_leaf(); }
  const char* op_name() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  // Seeds a scalar output with 1.
  void backward() const;
  void backward(std::span<const T> seed) const;

  // Same values, no history.
  Tensor detach() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Ordered record of the ops reachable from a root, ascending by creation.
// Creation order is a topological order: inputs always exist before the op
// that consumes them.
template <typename T>
class Tape {
 public:
  static Tape record(const Tensor<T>& root);

  std::size_t size() const { return nodes_.size(); }
  std::vector<std::string> op_names() const;
  std::vector<std::uint64_t> sequence() const;

  void backward(const Tensor<T>& root, std::span<const T> seed) const;

 private:
  std::vector<std::shared_ptr<detail::Node<T>>> nodes_;
};

namespace detail {

// Throws NonFiniteError if any value is NaN or infinite.
template <typename T>
void ensure_finite(const char* op, std::span<const T> values);

template <typename T>
Tensor<T> make_output(const char* op, Shape shape, std::vector<T> data);

template <typename T>
bool needs_grad(std::initializer_list<const Tensor<T>*> inputs);

template <typename T>
void attach(Tensor<T>& out, std::initializer_list<const Tensor<T>*> inputs,
            std::function<void(const std::vector<T>&)> backward);

template <typename T>
void attach(Tensor<T>& out, const std::vector<Tensor<T>>& inputs,
            std::function<void(const std::vector<T>&)> backward);

}  // namespace detail

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace gafx
