// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace gafx {

bool is_power_of_two(std::size_t n);

// In-place iterative radix-2 transform, X_k = sum_n x_n exp(-2 pi i k n / N).
// The inverse is unnormalized. Throws ConfigError unless N is a power of two.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

}  // namespace gafx
