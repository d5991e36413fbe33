// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gafx/tensor/tensor.hpp"

// Differentiable tensor operations. Every op validates extents, checks its
// output for NaN/Inf and, when gradients are recorded, attaches a backward
// closure to the result.
namespace gafx::ops {

// floor((in + pad_total - kernel) / stride) + 1; throws DimensionError when the
// kernel does not fit the padded input.
std::size_t conv_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                        std::size_t pad_total);

// Elementwise, identical shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, double factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, double value);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
// Exact (erf) form.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
// Splits `axis` into halves (a, b) and returns a * sigmoid(b).
template <typename T> Tensor<T> glu(const Tensor<T>& x, std::size_t axis = 0);

// Softmax over the last axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

// Normalizes over the last axis; gamma/beta may be undefined.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps = 1e-5);

// x is [C, ...]; statistics over every axis but the first. In training mode
// the running buffers are updated in place (momentum, unbiased variance).
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, bool training,
                     double momentum = 0.1, double eps = 1e-5);

struct Pool2d {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;
};

// x is [C, H, W]; padding behaves as -inf.
template <typename T> Tensor<T> max_pool2d(const Tensor<T>& x, const Pool2d& p);

// Reductions. `mean`/`sum` over an axis drop that axis.
template <typename T> Tensor<T> sum(const Tensor<T>& x, std::size_t axis);
template <typename T> Tensor<T> mean(const Tensor<T>& x, std::size_t axis);
template <typename T> Tensor<T> sum_all(const Tensor<T>& x);
template <typename T> Tensor<T> mean_all(const Tensor<T>& x);

// [M, K] x [K, N] -> [M, N].
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// x [M, In], weight [Out, In], bias [Out] (may be undefined) -> [M, Out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);

// Data movement.
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start,
                std::size_t length);
// Zero padding along one axis.
template <typename T>
Tensor<T> pad(const Tensor<T>& x, std::size_t axis, std::size_t before,
              std::size_t after);

struct Conv2d {
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
};

// x [C, H, W], weight [O, C, kH, kW], bias [O] (may be undefined).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, const Conv2d& geometry);

// x [C, L], weight [O, C, k].
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride,
                 std::size_t pad_left, std::size_t pad_right);

// Adjoint of conv2d. x [C, H, W], weight [C, O, kH, kW]. The full output
// ((H-1)*sH + kH, ...) is cropped to [crop_top, crop_top + out_h) etc.
struct ConvTranspose2d {
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t crop_top = 0, crop_left = 0;
  std::size_t out_h = 0, out_w = 0;  // 0 selects the full extent minus crop
};

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight,
                           const Tensor<T>& bias,
                           const ConvTranspose2d& geometry);

// x [C, L], weight [C, O, k].
template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight,
                           const Tensor<T>& bias, std::size_t stride,
                           std::size_t crop_left, std::size_t out_len);

// Mean over the batch of -log softmax(logits)[label]. logits [N, K].
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                std::span<const int> labels);

// Mean of max(x,0) - x*t + log(1 + exp(-|x|)); target receives no gradient.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace gafx::ops
