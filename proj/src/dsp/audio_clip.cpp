// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/audio_clip.hpp"

#include <string>

#include "gafx/error.hpp"

namespace gafx {

double AudioClip::duration() const {
  return sample_rate > 0 ? static_cast<double>(length()) / sample_rate : 0.0;
}

void AudioClip::validate() const {
  if (sample_rate <= 0) {
    throw ConfigError("audio clip: sample rate must be positive, got " +
                      std::to_string(sample_rate));
  }
  if (channels.empty()) throw DimensionError("audio clip: no channels");
  for (const auto& c : channels) {
    if (c.size() != channels[0].size()) {
      throw DimensionError("audio clip: channel lengths differ (" + std::to_string(c.size()) +
                           " vs " + std::to_string(channels[0].size()) + ")");
    }
  }
}

AudioClip make_clip(std::vector<float> mono, int sample_rate) {
  AudioClip clip;
  clip.channels.push_back(std::move(mono));
  clip.sample_rate = sample_rate;
  clip.validate();
  return clip;
}

AudioClip to_stereo(const AudioClip& clip) {
  clip.validate();
  if (clip.num_channels() == 2) return clip;
  if (clip.num_channels() != 1) {
    throw ContractError("to_stereo: expected 1 channel, got " +
                        std::to_string(clip.num_channels()));
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels = {clip.channels[0], clip.channels[0]};
  return out;
}

AudioClip to_mono(const AudioClip& clip) {
  clip.validate();
  if (clip.num_channels() == 1) return clip;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  std::vector<float> mono(clip.length());
  const double inv = 1.0 / static_cast<double>(clip.num_channels());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    double acc = 0.0;
    for (const auto& c : clip.channels) acc += c[i];
    mono[i] = static_cast<float>(acc * inv);
  }
  out.channels.push_back(std::move(mono));
  return out;
}

AudioClip slice_clip(const AudioClip& clip, std::size_t offset, std::size_t length) {
  clip.validate();
  if (offset + length > clip.length()) {
    throw DimensionError("slice_clip: [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") exceeds " +
                         std::to_string(clip.length()) + " samples");
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  for (const auto& c : clip.channels) {
    out.channels.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(offset),
                              c.begin() + static_cast<std::ptrdiff_t>(offset + length));
  }
  return out;
}

AudioClip fit_length(const AudioClip& clip, std::size_t length) {
  AudioClip out = clip;
  for (auto& c : out.channels) c.resize(length, 0.0f);
  return out;
}

}  // namespace gafx
