// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/stft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gafx/dsp/fft.hpp"
#include "gafx/error.hpp"

namespace gafx {
namespace {

template <typename S>
ComplexSpectrogram stft_impl(std::span<const S> x, const SpectrogramConfig& cfg) {
  cfg.validate();
  ComplexSpectrogram out;
  out.frames = stft_frames(x.size(), cfg);
  out.bins = cfg.bins_kept;
  out.values.resize(out.frames * out.bins);
  const auto window = hann_window(cfg.fft_length);
  const auto pad = static_cast<std::ptrdiff_t>(cfg.centered ? cfg.fft_length / 2 : 0);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  std::vector<std::complex<double>> buf(cfg.fft_length);
  for (std::size_t t = 0; t < out.frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * cfg.hop) - pad;
    for (std::size_t n = 0; n < cfg.fft_length; ++n) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(n);
      const double v = (idx >= 0 && idx < len) ? static_cast<double>(x[static_cast<std::size_t>(idx)]) : 0.0;
      buf[n] = {v * window[n], 0.0};
    }
    fft_inplace(buf);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(out.bins),
              out.values.begin() + static_cast<std::ptrdiff_t>(t * out.bins));
  }
  return out;
}

}  // namespace

void SpectrogramConfig::validate() const {
  if (!is_power_of_two(fft_length) || fft_length < 2) {
    throw ConfigError("stft: fft_length " + std::to_string(fft_length) + " must be a power of two >= 2");
  }
  if (hop == 0 || hop > fft_length) {
    throw ConfigError("stft: hop " + std::to_string(hop) + " must be in [1, fft_length]");
  }
  if (bins_kept == 0 || bins_kept > fft_length / 2 + 1) {
    throw ConfigError("stft: bins_kept " + std::to_string(bins_kept) + " must be in [1, fft_length/2 + 1]");
  }
}

SpectrogramConfig spectral_branch_config() {
  SpectrogramConfig c;
  c.fft_length = 4096;
  c.hop = 1024;
  c.centered = true;
  c.bins_kept = 2048;
  return c;
}

std::size_t stft_frames(std::size_t length, const SpectrogramConfig& cfg) {
  if (length == 0) throw DimensionError("stft: empty signal");
  if (cfg.centered) return length / cfg.hop + 1;
  if (length < cfg.fft_length) {
    throw DimensionError("stft: signal of " + std::to_string(length) + " samples is shorter than fft_length " +
                         std::to_string(cfg.fft_length));
  }
  return (length - cfg.fft_length) / cfg.hop + 1;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

ComplexSpectrogram stft(std::span<const float> signal, const SpectrogramConfig& cfg) {
  return stft_impl(signal, cfg);
}

ComplexSpectrogram stft(std::span<const double> signal, const SpectrogramConfig& cfg) {
  return stft_impl(signal, cfg);
}

template <typename T>
Tensor<T> stft_magnitude(const Tensor<T>& signal, const SpectrogramConfig& cfg) {
  if (signal.dim() != 1) throw DimensionError("stft_magnitude: expected [L], got " + shape_str(signal.shape()));
  const auto spec = stft_impl(signal.data(), cfg);
  std::vector<T> mag(spec.values.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = static_cast<T>(std::abs(spec.values[i]));
  auto out = detail::make_output<T>("stft_magnitude", {spec.frames, spec.bins}, std::move(mag));
  if (detail::needs_grad<T>({&signal})) {
    auto xn = signal.node();
    // The spectrum is recomputed in backward instead of being held by the tape.
    detail::attach<T>(out, {&signal}, [xn, cfg](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      const auto c = stft_impl(std::span<const T>(xn->data), cfg);
      const auto window = hann_window(cfg.fft_length);
      const auto pad = static_cast<std::ptrdiff_t>(cfg.centered ? cfg.fft_length / 2 : 0);
      const auto len = static_cast<std::ptrdiff_t>(xn->data.size());
      std::vector<std::complex<double>> buf(cfg.fft_length);
      for (std::size_t t = 0; t < c.frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        bool any = false;
        for (std::size_t k = 0; k < c.bins; ++k) {
          const auto v = c.values[t * c.bins + k];
          const double m = std::abs(v);
          const double g = gy[t * c.bins + k];
          if (m > 0.0 && g != 0.0) {
            buf[k] = std::conj(v) * (g / m);
            any = true;
          }
        }
        if (!any) continue;
        fft_inplace(buf);
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * cfg.hop) - pad;
        for (std::size_t n = 0; n < cfg.fft_length; ++n) {
          const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(n);
          if (idx < 0 || idx >= len) continue;
          (*gx)[static_cast<std::size_t>(idx)] += static_cast<T>(window[n] * buf[n].real());
        }
      }
    });
  }
  return out;
}

template Tensor<float> stft_magnitude<float>(const Tensor<float>&, const SpectrogramConfig&);
template Tensor<double> stft_magnitude<double>(const Tensor<double>&, const SpectrogramConfig&);

}  // namespace gafx
