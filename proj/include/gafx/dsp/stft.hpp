// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "gafx/tensor/tensor.hpp"

namespace gafx {

struct SpectrogramConfig {
  std::size_t fft_length = 512;
  std::size_t hop = 128;
  bool centered = true;
  std::size_t bins_kept = 257;

  void validate() const;
};

// fft 4096, hop 1024, centered, Nyquist dropped: (469, 2048) for 480000 samples.
SpectrogramConfig spectral_branch_config();

// Centered: floor(L / hop) + 1. Otherwise floor((L - fft) / hop) + 1.
std::size_t stft_frames(std::size_t length, const SpectrogramConfig& cfg);

// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

struct ComplexSpectrogram {
  std::size_t frames = 0, bins = 0;
  std::vector<std::complex<double>> values;  // [frames, bins]
};

// Centered framing pads fft_length / 2 zeros on each side.
ComplexSpectrogram stft(std::span<const float> signal, const SpectrogramConfig& cfg);
ComplexSpectrogram stft(std::span<const double> signal, const SpectrogramConfig& cfg);

// Differentiable |STFT| of a 1-D tensor [L] -> [frames, bins].
template <typename T>
Tensor<T> stft_magnitude(const Tensor<T>& signal, const SpectrogramConfig& cfg);

}  // namespace gafx
