// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gafx/tensor/tensor.hpp"

namespace gafx {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments per parameter, lazily sized on the first step.
template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<T>> m, v;
  std::uint64_t step_count = 0;
};

// Bias-corrected Adam update of `params` with explicit gradients.
template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const std::span<const T>> grads,
               AdamState<T>& state, double lr);

// Same, reading each parameter's accumulated gradient (absent means zero).
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, double lr);

}  // namespace gafx
