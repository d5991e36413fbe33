// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gafx/dsp/audio_clip.hpp"

namespace gafx {

// RIFF/WAVE, 16-bit PCM, 1 or 2 channels. Samples are scaled by 1/32768.
// Malformed input raises FormatError naming the byte offset.
AudioClip parse_wav(std::span<const std::uint8_t> bytes);
AudioClip load_wav(const std::string& path);

// 16-bit PCM; values are rounded to the nearest step and clipped.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void save_wav(const std::string& path, const AudioClip& clip);

}  // namespace gafx
