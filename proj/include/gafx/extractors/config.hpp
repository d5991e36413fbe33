// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "gafx/dsp/stft.hpp"

namespace gafx {

enum class ExtractorKind { none, gafx_u, gafx_r, gafx_a };

const char* extractor_kind_name(ExtractorKind kind);
// Accepts "none", "gafx-u", "gafx-r", "gafx-a"; throws ConfigError otherwise.
ExtractorKind parse_extractor_kind(const std::string& name);

struct GafxUConfig {
  std::size_t input_channels = 2;
  std::array<std::size_t, 6> encoder_channels{48, 96, 192, 384, 768, 1536};
  std::size_t output_channels = 16;  // 4 sources x 2 stereo x 2
  std::size_t kernel = 8, stride = 4, pad = 2;
  std::size_t lstm_layers = 2;
  // skip[i] wires encoder layer i + 1 into the matching decoder layer.
  std::array<bool, 6> skip{true, true, true, true, true, true};
  SpectrogramConfig stft = spectral_branch_config();
};

struct GafxRConfig {
  std::size_t stem_channels = 64;
  std::array<std::size_t, 5> stage_channels{64, 128, 256, 512, 128};
  std::array<std::size_t, 5> stage_stride_w{1, 2, 2, 2, 2};
  std::size_t row_width = 200;
};

struct GafxAConfig {
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
};

struct ExtractorConfig {
  ExtractorKind kind = ExtractorKind::gafx_r;
  // Divides every channel count that does not fix the feature width.
  std::size_t width_scale = 1;
  // Clips are fit to this many samples before extraction; 0 keeps any length.
  std::size_t input_samples = 0;
  GafxUConfig u;
  GafxRConfig r;
  GafxAConfig a;

  // Throws ConfigError for a zero width scale or any channel count that
  // scales to zero.
  void validate() const;
  std::size_t scaled(std::size_t channels) const;
};

// Feature width of every extractor and of the mel baseline.
constexpr std::size_t kFeatureBins = 128;

int required_sample_rate(ExtractorKind kind);
std::size_t required_channels(ExtractorKind kind);
// Standard input length: 30 s at the path's rate.
std::size_t full_clip_samples(ExtractorKind kind);

// Time steps of the feature for a clip of `samples` samples.
std::size_t feature_frames(const ExtractorConfig& cfg, std::size_t samples);

// Exact parameter count from closed-form sums over the configuration.
std::size_t count_parameters(const ExtractorConfig& cfg);

// Per-layer output lengths of the temporal encoder (GAFX-U), input excluded.
std::array<std::size_t, 6> gafxu_encoder_lengths(const ExtractorConfig& cfg, std::size_t samples);
// Width axis through stem, pool and the five stages (GAFX-R/A), input first.
std::array<std::size_t, 8> gafxr_width_trace(const ExtractorConfig& cfg);

}  // namespace gafx
