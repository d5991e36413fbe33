// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/tensor/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace gafx {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

const char* dtype_name(DType dtype) {
  return dtype == DType::f32 ? "f32" : "f64";
}

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_sequence{0};
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

std::uint64_t next_sequence() { return ++g_sequence; }

template <typename T>
void ensure_finite(const char* op, std::span<const T> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << (std::isnan(values[i]) ? "NaN" : "Inf") << " at flat index "
         << i << " of " << values.size();
      throw NonFiniteError(op, os.str());
    }
  }
}

template <typename T>
Tensor<T> make_output(const char* op, Shape shape, std::vector<T> data) {
  ensure_finite<T>(op, data);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->seq = next_sequence();
  node->op = op;
  return Tensor<T>(std::move(node));
}

template <typename T>
bool needs_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void attach(Tensor<T>& out, std::initializer_list<const Tensor<T>*> inputs,
            std::function<void(const std::vector<T>&)> backward) {
  auto& node = *out.node();
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) node.parents.push_back(t->node());
  }
  node.requires_grad = true;
  node.backward = std::move(backward);
}

template <typename T>
void attach(Tensor<T>& out, const std::vector<Tensor<T>>& inputs,
            std::function<void(const std::vector<T>&)> backward) {
  auto& node = *out.node();
  for (const auto& t : inputs) {
    if (t.defined() && t.requires_grad()) node.parents.push_back(t.node());
  }
  node.requires_grad = true;
  node.backward = std::move(backward);
}

}  // namespace detail

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  for (auto e : shape) {
    if (e == 0) throw DimensionError("zero extent in shape " + shape_str(shape));
  }
  node_ = std::make_shared<detail::Node<T>>();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
  node_->requires_grad = requires_grad;
  node_->seq = detail::next_sequence();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
std::size_t Tensor<T>::extent(std::size_t axis) const {
  if (axis >= dim()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(shape()));
  }
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->data[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool flag) {
  if (!is_leaf()) throw ContractError("requires_grad can only be set on leaves");
  node_->requires_grad = flag;
  return *this;
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw DimensionError("backward() without seed needs a scalar, got " +
                         shape_str(shape()));
  }
  const T one = T(1);
  Tape<T>::record(*this).backward(*this, std::span<const T>(&one, 1));
}

template <typename T>
void Tensor<T>::backward(std::span<const T> seed) const {
  Tape<T>::record(*this).backward(*this, seed);
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), node_->data);
}

template <typename T>
Tape<T> Tape<T>::record(const Tensor<T>& root) {
  Tape tape;
  if (!root.requires_grad()) return tape;
  std::unordered_set<const detail::Node<T>*> seen;
  std::vector<std::shared_ptr<detail::Node<T>>> stack{root.node()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : node->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
    }
    tape.nodes_.push_back(std::move(node));
  }
  std::sort(tape.nodes_.begin(), tape.nodes_.end(),
            [](const auto& a, const auto& b) { return a->seq < b->seq; });
  return tape;
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.emplace_back(n->op);
  return names;
}

template <typename T>
std::vector<std::uint64_t> Tape<T>::sequence() const {
  std::vector<std::uint64_t> seq;
  seq.reserve(nodes_.size());
  for (const auto& n : nodes_) seq.push_back(n->seq);
  return seq;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& root, std::span<const T> seed) const {
  if (seed.size() != root.numel()) {
    throw DimensionError("backward seed has " + std::to_string(seed.size()) +
                         " values for output " + shape_str(root.shape()));
  }
  if (nodes_.empty()) return;
  // Interior gradients are per-pass; leaves accumulate across passes.
  for (const auto& n : nodes_) {
    if (!n->is_leaf()) n->grad.clear();
  }
  auto& root_grad = root.node()->grad_ref();
  for (std::size_t i = 0; i < seed.size(); ++i) root_grad[i] += seed[i];
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& n = **it;
    if (n.is_leaf() || n.grad.empty()) continue;
    n.backward(n.grad);
    n.grad.clear();
    n.grad.shrink_to_fit();
  }
}

#define GAFX_INSTANTIATE(T)                                                  \
  template class Tensor<T>;                                                  \
  template class Tape<T>;                                                    \
  template void detail::ensure_finite<T>(const char*, std::span<const T>);   \
  template Tensor<T> detail::make_output<T>(const char*, Shape,              \
                                            std::vector<T>);                 \
  template bool detail::needs_grad<T>(std::initializer_list<const Tensor<T>*>); \
  template void detail::attach<T>(Tensor<T>&,                                \
                                  std::initializer_list<const Tensor<T>*>,   \
                                  std::function<void(const std::vector<T>&)>); \
  template void detail::attach<T>(Tensor<T>&, const std::vector<Tensor<T>>&, \
                                  std::function<void(const std::vector<T>&)>);

GAFX_INSTANTIATE(float)
GAFX_INSTANTIATE(double)

#undef GAFX_INSTANTIATE

}  // namespace gafx
