// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gafx/tensor/ops.hpp"
#include "gafx/tensor/rng.hpp"
#include "gafx/tensor/tensor.hpp"

namespace gafx::nn {

enum class ParamKind { parameter, buffer };

template <typename T>
using ParamVisitor =
    std::function<void(const std::string& name, Tensor<T>& tensor, ParamKind kind)>;

std::string join_name(const std::string& prefix, const std::string& name);

template <typename T>
class Module {
 public:
  virtual ~Module() = default;
  // Enumerates trainable parameters and persistent buffers in a fixed order.
  virtual void visit(const std::string& prefix, const ParamVisitor<T>& fn) = 0;
  virtual void set_training(bool training) { (void)training; }
};

template <typename T>
std::vector<Tensor<T>> parameters(Module<T>& m);
template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> named_tensors(Module<T>& m);
template <typename T>
std::size_t parameter_count(Module<T>& m);
template <typename T>
void zero_grads(Module<T>& m);
// Sets every tensor whose name ends in "bias" to zero.
template <typename T>
void zero_biases(Module<T>& m);
template <typename T>
void set_requires_grad(Module<T>& m, bool flag);

// Fills `t` with U(-bound, bound).
template <typename T>
void uniform_fill(Tensor<T>& t, double bound, Rng& rng);

// y = x W^T + b. Weight [out, in], Kaiming-uniform (bound 1/sqrt(in)), zero bias.
template <typename T>
class Linear : public Module<T> {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool bias = true);
  Tensor<T> forward(const Tensor<T>& x) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> weight, bias;
};

template <typename T>
class Conv2d : public Module<T> {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out, std::size_t kernel_h, std::size_t kernel_w,
         ops::Conv2d geometry, Rng& rng, bool bias = true);
  Tensor<T> forward(const Tensor<T>& x) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> weight, bias;
  ops::Conv2d geometry;
};

template <typename T>
class Conv1d : public Module<T> {
 public:
  Conv1d() = default;
  Conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
         std::size_t pad, Rng& rng, bool bias = true);
  // Extra right padding lets callers align the input to the stride.
  Tensor<T> forward(const Tensor<T>& x, std::size_t extra_right = 0) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> weight, bias;
  std::size_t stride = 1, pad = 0;
};

// Weight [in, out, kH, kW].
template <typename T>
class ConvTranspose2d : public Module<T> {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::size_t in, std::size_t out, std::size_t kernel_h,
                  std::size_t kernel_w, std::size_t stride_h, std::size_t stride_w,
                  std::size_t crop_top, std::size_t crop_left, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::size_t out_h, std::size_t out_w) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> weight, bias;
  std::size_t stride_h = 1, stride_w = 1, crop_top = 0, crop_left = 0;
};

template <typename T>
class ConvTranspose1d : public Module<T> {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(std::size_t in, std::size_t out, std::size_t kernel,
                  std::size_t stride, std::size_t crop, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::size_t out_len) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> weight, bias;
  std::size_t stride = 1, crop = 0;
};

template <typename T>
class LayerNorm : public Module<T> {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim, double eps = 1e-5);
  Tensor<T> forward(const Tensor<T>& x) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Tensor<T> gamma, beta;
  double eps = 1e-5;
};

template <typename T>
class BatchNorm : public Module<T> {
 public:
  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5);
  Tensor<T> forward(const Tensor<T>& x);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;
  void set_training(bool training) override { training_ = training; }
  bool training() const { return training_; }

  Tensor<T> gamma, beta, running_mean, running_var;
  double momentum = 0.1, eps = 1e-5;

 private:
  bool training_ = true;
};

// One direction of one LSTM layer. Gate order (input, forget, cell, output).
template <typename T>
struct LstmCell {
  Tensor<T> w_ih;  // [4H, in]
  Tensor<T> w_hh;  // [4H, H]
  Tensor<T> bias;  // [4H]
  std::size_t hidden = 0;

  // Runs the cell over `xs` ([T, in]) in forward or reversed time order and
  // returns the hidden states at their original positions, [T, H].
  Tensor<T> run(const Tensor<T>& xs, bool reverse) const;
};

// Multi-layer bidirectional LSTM over a [T, C] sequence; the concatenated
// [T, 2H] output of the last layer is projected back to [T, C].
template <typename T>
class BiLstm : public Module<T> {
 public:
  BiLstm() = default;
  BiLstm(std::size_t channels, std::size_t hidden, std::size_t layers, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
  // Output of the recurrent layers before projection, [T, 2H].
  Tensor<T> recurrent(const Tensor<T>& x) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  std::vector<LstmCell<T>> forward_cells, backward_cells;
  Linear<T> projection;
};

template <typename T>
class MultiHeadAttention : public Module<T> {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng);
  // x [T, D]. When `weights` is given it receives one [T, T] matrix per head.
  Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* weights = nullptr) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  Linear<T> qkv, proj;
  std::size_t dim = 0, heads = 1;
};

// Pre-norm block: x + attn(ln1(x)), then + mlp(ln2(x)) with GELU.
template <typename T>
class TransformerBlock : public Module<T> {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t dim, std::size_t heads, std::size_t mlp_ratio, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* weights = nullptr) const;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;

  LayerNorm<T> ln1, ln2;
  MultiHeadAttention<T> attn;
  Linear<T> fc1, fc2;
};

// Fixed sinusoidal position table [T, D].
template <typename T>
Tensor<T> sinusoidal_positions(std::size_t length, std::size_t dim);

}  // namespace gafx::nn
