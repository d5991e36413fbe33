// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gafx/dsp/audio_clip.hpp"

namespace gafx {

// round(length * target / source), computed exactly in integers.
std::size_t resampled_length(std::size_t length, int source_rate, int target_rate);

// Band-limited polyphase resampling with a Kaiser-windowed sinc (beta 8.6,
// 64 zero crossings per side, cutoff 0.97 of the lower Nyquist). Each phase's
// taps are normalized to unit sum; samples beyond either end repeat the edge.
std::vector<float> resample_channel(std::span<const float> x, int source_rate,
                                    int target_rate);
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace gafx
