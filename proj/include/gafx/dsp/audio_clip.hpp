// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <vector>

namespace gafx {

// Sampled waveform, one vector per channel, values nominally in [-1, 1].
struct AudioClip {
  std::vector<std::vector<float>> channels;
  int sample_rate = 0;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
  double duration() const;

  // Throws ConfigError for a non-positive rate, DimensionError when channels
  // differ in length or there are none.
  void validate() const;
};

AudioClip make_clip(std::vector<float> mono, int sample_rate);

AudioClip to_stereo(const AudioClip& clip);
// Channel mean.
AudioClip to_mono(const AudioClip& clip);

// Samples [offset, offset + length); throws DimensionError past the end.
AudioClip slice_clip(const AudioClip& clip, std::size_t offset, std::size_t length);
// Truncates or zero-pads every channel to `length`.
AudioClip fit_length(const AudioClip& clip, std::size_t length);

}  // namespace gafx
