// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/mel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gafx/error.hpp"

namespace gafx {
namespace {

constexpr double kLinearHzPerMel = 200.0 / 3.0;
constexpr double kBreakHz = 1000.0;
constexpr double kBreakMel = kBreakHz / kLinearHzPerMel;  // 15

double log_step() { return std::log(6.4) / 27.0; }

}  // namespace

double hz_to_mel(double hz) {
  if (hz < kBreakHz) return hz / kLinearHzPerMel;
  return kBreakMel + std::log(hz / kBreakHz) / log_step();
}

double mel_to_hz(double mel) {
  if (mel < kBreakMel) return mel * kLinearHzPerMel;
  return kBreakHz * std::exp(log_step() * (mel - kBreakMel));
}

MelFilterbank MelFilterbank::create(std::size_t n_mels, std::size_t fft_length, int sample_rate,
                                    double f_min, double f_max) {
  if (n_mels == 0 || fft_length < 2 || sample_rate <= 0) {
    throw ConfigError("mel filterbank: invalid size or sample rate");
  }
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
    throw ConfigError("mel filterbank: need 0 <= f_min < f_max <= sample_rate/2");
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = fft_length / 2 + 1;
  fb.f_min = f_min;
  fb.f_max = f_max;
  fb.weights.assign(n_mels * fb.n_bins, 0.0);
  const double lo = hz_to_mel(f_min), hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t j = 0; j < fb.n_bins; ++j) {
      const double f = static_cast<double>(j) * sample_rate / static_cast<double>(fft_length);
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      fb.weights[m * fb.n_bins + j] = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

MelProfileSpec mel_profile_spec(MelProfile profile) {
  MelProfileSpec s;
  s.stft.fft_length = 512;
  s.stft.centered = true;
  s.stft.bins_kept = 257;
  s.n_mels = 128;
  if (profile == MelProfile::baseline_22k) {
    s.sample_rate = 22050;
    s.stft.hop = 200;
  } else {
    s.sample_rate = 16000;
    s.stft.hop = 160;
    s.pad_frames_to = 1024;
  }
  return s;
}

std::size_t mel_frames(std::size_t samples, MelProfile profile) {
  const auto s = mel_profile_spec(profile);
  return s.pad_frames_to ? s.pad_frames_to : stft_frames(samples, s.stft);
}

FeatureMap mel_spectrogram(const AudioClip& clip, MelProfile profile) {
  const auto spec = mel_profile_spec(profile);
  clip.validate();
  if (clip.sample_rate != spec.sample_rate) {
    throw ConfigError("mel_spectrogram: profile expects " + std::to_string(spec.sample_rate) +
                      " Hz input, got " + std::to_string(clip.sample_rate) + " Hz");
  }
  const AudioClip mono = to_mono(clip);
  const auto fb = MelFilterbank::create(spec.n_mels, spec.stft.fft_length, spec.sample_rate, 0.0,
                                        spec.sample_rate / 2.0);
  const auto c = stft(std::span<const float>(mono.channels[0]), spec.stft);
  const std::size_t frames = spec.pad_frames_to ? spec.pad_frames_to : c.frames;
  const float floor_value = static_cast<float>(std::log(kLogOffset));
  std::vector<float> out(frames * spec.n_mels, floor_value);
  std::vector<double> power(c.bins);
  for (std::size_t t = 0; t < std::min(frames, c.frames); ++t) {
    for (std::size_t k = 0; k < c.bins; ++k) power[k] = std::norm(c.values[t * c.bins + k]);
    for (std::size_t m = 0; m < spec.n_mels; ++m) {
      double acc = 0.0;
      const double* w = &fb.weights[m * fb.n_bins];
      for (std::size_t k = 0; k < c.bins; ++k) acc += w[k] * power[k];
      out[t * spec.n_mels + m] = static_cast<float>(std::log(acc + kLogOffset));
    }
  }
  FeatureMap fm;
  fm.values = Tensor<float>({frames, spec.n_mels}, std::move(out));
  fm.source = FeatureSource::mel_baseline;
  return fm;
}

}  // namespace gafx
