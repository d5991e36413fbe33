// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gafx/tensor/rng.hpp"
#include "gafx/tensor/tensor.hpp"

namespace gafx {

struct GradCheckOptions {
  double step = 1e-4;        // finite-difference step
  double tolerance = 1e-6;   // max relative error
  std::size_t max_probes = 48;  // entries probed per tensor
  std::uint64_t seed = 0;
};

// f64: step 1e-4, tolerance 1e-6. f32: step 2e-2, tolerance 1e-3.
GradCheckOptions default_gradcheck_options(DType dtype, std::uint64_t seed = 0);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  bool passed = false;
};

// Compares reverse-mode gradients of L = sum_i r_i * forward()_i (r fixed
// random weights) with a fourth-order central finite-difference estimate,
// perturbing each probed entry of `probes` in place.
//
// The error for one tensor is max |analytic - numeric| divided by the larger of
// that tensor's gradient magnitude and 1% of the largest magnitude over all
// probes, so legitimately near-zero gradients do not divide by noise.
template <typename T>
GradCheckResult check_gradients(const std::string& name,
                                const std::function<Tensor<T>()>& forward,
                                std::vector<Tensor<T>> probes,
                                const GradCheckOptions& options);

struct GradCheckReport {
  std::string module;
  DType dtype = DType::f64;
  std::uint64_t seed = 0;
  std::vector<GradCheckResult> results;

  bool passed() const;
  std::string summary() const;
};

// Every differentiable tensor-core op on randomized small shapes.
GradCheckReport run_tensor_core_gradcheck(std::uint64_t seed, DType dtype);

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = true);

}  // namespace gafx
