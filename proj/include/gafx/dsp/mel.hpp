// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <vector>

#include "gafx/dsp/audio_clip.hpp"
#include "gafx/dsp/feature.hpp"
#include "gafx/dsp/stft.hpp"

namespace gafx {

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with unit peaks on n_mels + 2 mel-spaced edges.
struct MelFilterbank {
  std::size_t n_mels = 0, n_bins = 0;
  double f_min = 0.0, f_max = 0.0;
  std::vector<double> weights;  // [n_mels, n_bins]

  static MelFilterbank create(std::size_t n_mels, std::size_t fft_length, int sample_rate,
                              double f_min, double f_max);
  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

enum class MelProfile { baseline_22k, pretrain_16k };

struct MelProfileSpec {
  int sample_rate = 0;
  SpectrogramConfig stft;
  std::size_t n_mels = 128;
  std::size_t pad_frames_to = 0;  // 0 keeps the natural frame count
};

MelProfileSpec mel_profile_spec(MelProfile profile);

constexpr double kLogOffset = 1e-6;

// log(mel . |STFT|^2 + 1e-6) of the channel mean; [T, n_mels]. The pretrain
// profile pads to 1024 frames with log(1e-6), the value of silent frames.
FeatureMap mel_spectrogram(const AudioClip& clip, MelProfile profile);

// Closed-form frame count for `samples` at the profile's rate.
std::size_t mel_frames(std::size_t samples, MelProfile profile);

}  // namespace gafx
