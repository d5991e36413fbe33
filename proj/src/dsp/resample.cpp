// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "gafx/error.hpp"

namespace gafx {
namespace {

constexpr double kBeta = 8.6;
constexpr double kZeroCrossings = 64.0;
constexpr double kRolloff = 0.97;
// Above this many phases the taps are computed per output sample.
constexpr std::int64_t kMaxTablePhases = 4096;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double t, double beta) {
  // t in [-1, 1]
  const double r = 1.0 - t * t;
  if (r <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(r)) / std::cyl_bessel_i(0.0, beta);
}

struct Kernel {
  double cutoff = 1.0;      // fraction of the input Nyquist
  double half_width = 0.0;  // in input samples
  std::int64_t taps_left = 0;
  std::int64_t taps = 0;

  // Taps for an output instant `frac` input samples past input index `base`;
  // tap j multiplies x[base - taps_left + 1 + j].
  void fill(double frac, std::vector<double>& h) const {
    h.assign(static_cast<std::size_t>(taps), 0.0);
    double total = 0.0;
    for (std::int64_t j = 0; j < taps; ++j) {
      const double d = static_cast<double>(j - taps_left + 1) - frac;
      const double v = std::abs(d) >= half_width ? 0.0 : cutoff * sinc(cutoff * d) * kaiser(d / half_width, kBeta);
      h[static_cast<std::size_t>(j)] = v;
      total += v;
    }
    for (auto& v : h) v /= total;
  }
};

}  // namespace

std::size_t resampled_length(std::size_t length, int source_rate, int target_rate) {
  if (source_rate <= 0 || target_rate <= 0) {
    throw ConfigError("resample: rates must be positive (got " + std::to_string(source_rate) +
                      " -> " + std::to_string(target_rate) + ")");
  }
  const auto num = static_cast<unsigned __int128>(length) * static_cast<unsigned>(target_rate);
  const auto den = static_cast<unsigned __int128>(static_cast<unsigned>(source_rate));
  return static_cast<std::size_t>((2 * num + den) / (2 * den));
}

std::vector<float> resample_channel(std::span<const float> x, int source_rate, int target_rate) {
  const std::size_t out_len = resampled_length(x.size(), source_rate, target_rate);
  if (source_rate == target_rate) return {x.begin(), x.end()};
  if (x.empty()) return {};
  const std::int64_t g = std::gcd(source_rate, target_rate);
  const std::int64_t up = target_rate / g, down = source_rate / g;

  Kernel k;
  k.cutoff = kRolloff * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  k.half_width = kZeroCrossings / k.cutoff;
  k.taps_left = static_cast<std::int64_t>(std::ceil(k.half_width));
  k.taps = 2 * k.taps_left;

  std::vector<std::vector<double>> table;
  if (up <= kMaxTablePhases) {
    table.resize(static_cast<std::size_t>(up));
    for (std::int64_t p = 0; p < up; ++p) {
      k.fill(static_cast<double>(p) / static_cast<double>(up), table[static_cast<std::size_t>(p)]);
    }
  }
  const auto last = static_cast<std::int64_t>(x.size()) - 1;
  std::vector<double> scratch;
  std::vector<float> y(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const std::int64_t pos = static_cast<std::int64_t>(n) * down;
    const std::int64_t base = pos / up, phase = pos % up;
    const std::vector<double>* h = nullptr;
    if (!table.empty()) {
      h = &table[static_cast<std::size_t>(phase)];
    } else {
      k.fill(static_cast<double>(phase) / static_cast<double>(up), scratch);
      h = &scratch;
    }
    const std::int64_t first = base - k.taps_left + 1;
    double acc = 0.0;
    if (first >= 0 && first + k.taps - 1 <= last) {
      const float* src = x.data() + first;
      for (std::int64_t j = 0; j < k.taps; ++j) acc += (*h)[static_cast<std::size_t>(j)] * src[j];
    } else {
      for (std::int64_t j = 0; j < k.taps; ++j) {
        const std::int64_t idx = std::clamp<std::int64_t>(first + j, 0, last);
        acc += (*h)[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(idx)];
      }
    }
    y[n] = static_cast<float>(acc);
  }
  return y;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  clip.validate();
  if (target_rate <= 0) throw ConfigError("resample: target rate must be positive");
  AudioClip out;
  out.sample_rate = target_rate;
  for (const auto& c : clip.channels) {
    out.channels.push_back(resample_channel(c, clip.sample_rate, target_rate));
  }
  return out;
}

}  // namespace gafx
