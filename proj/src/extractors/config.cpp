// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/extractors/config.hpp"

#include <string>

#include "gafx/error.hpp"
#include "gafx/tensor/ops.hpp"

namespace gafx {
namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t residual_params(const ExtractorConfig& cfg) {
  const std::size_t stem = cfg.scaled(cfg.r.stem_channels);
  std::size_t n = 49 * stem + stem + 2 * stem;
  std::size_t in = stem;
  for (std::size_t s = 0; s < 5; ++s) {
    const std::size_t out = s == 4 ? cfg.r.stage_channels[4] : cfg.scaled(cfg.r.stage_channels[s]);
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t bin = b == 0 ? in : out;
      const bool proj = b == 0 && (cfg.r.stage_stride_w[s] != 1 || bin != out);
      n += 9 * bin * out + 2 * out + 9 * out * out + 2 * out;
      if (proj) n += bin * out + 2 * out;
    }
    in = out;
  }
  return n;
}

std::size_t gafxu_params(const ExtractorConfig& cfg) {
  const auto& u = cfg.u;
  std::array<std::size_t, 7> c{};
  c[0] = u.input_channels;
  for (std::size_t i = 0; i < 6; ++i) c[i + 1] = cfg.scaled(u.encoder_channels[i]);
  std::size_t n = 0;
  for (std::size_t i = 1; i <= 6; ++i) {
    n += u.kernel * c[i - 1] * 2 * c[i] + 2 * c[i];                         // temporal encoder
    n += (i == 6 ? 2 * 8 : 8) * c[i - 1] * 2 * c[i] + 2 * c[i];             // spectral encoder
    const std::size_t dec_out = i == 1 ? u.output_channels : 2 * c[i - 1];
    n += c[i] * dec_out * u.kernel + dec_out;                                // temporal decoder
    n += c[i] * dec_out * (i == 6 ? 2 * 8 : 8) + dec_out;                   // spectral decoder
  }
  const std::size_t H = c[6];
  for (std::size_t l = 0; l < u.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? c[6] : 2 * H;
    n += 2 * (4 * H * in + 4 * H * H + 4 * H);
  }
  n += 2 * H * c[6] + c[6];
  return n;
}

}  // namespace

const char* extractor_kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::none: return "none";
    case ExtractorKind::gafx_u: return "gafx-u";
    case ExtractorKind::gafx_r: return "gafx-r";
    case ExtractorKind::gafx_a: return "gafx-a";
  }
  return "unknown";
}

ExtractorKind parse_extractor_kind(const std::string& name) {
  if (name == "none") return ExtractorKind::none;
  if (name == "gafx-u") return ExtractorKind::gafx_u;
  if (name == "gafx-r") return ExtractorKind::gafx_r;
  if (name == "gafx-a") return ExtractorKind::gafx_a;
  throw ConfigError("unknown extractor '" + name + "' (expected none, gafx-u, gafx-r or gafx-a)");
}

std::size_t ExtractorConfig::scaled(std::size_t channels) const {
  if (width_scale == 0) throw ConfigError("width_scale must be at least 1");
  const std::size_t c = channels / width_scale;
  if (c == 0) {
    throw ConfigError("width_scale " + std::to_string(width_scale) + " reduces " + std::to_string(channels) +
                      " channels to zero");
  }
  return c;
}

void ExtractorConfig::validate() const {
  if (width_scale == 0) throw ConfigError("width_scale must be at least 1");
  switch (kind) {
    case ExtractorKind::none:
      return;
    case ExtractorKind::gafx_u:
      for (auto c : u.encoder_channels) scaled(c);
      if (u.input_channels != 2 || u.output_channels != 16) {
        throw ConfigError("gafx-u expects 2 input and 16 decoder output channels");
      }
      if (u.kernel != 8 || u.stride != 4 || u.pad != 2) {
        throw ConfigError("gafx-u temporal layers are fixed at kernel 8, stride 4, pad 2");
      }
      if (u.lstm_layers == 0) throw ConfigError("gafx-u needs at least one LSTM layer");
      u.stft.validate();
      if (u.stft.bins_kept != 2048 || u.stft.hop != 1024) {
        throw ConfigError("gafx-u spectral branch expects 2048 bins at hop 1024");
      }
      return;
    case ExtractorKind::gafx_a:
      if (kFeatureBins % a.heads != 0) {
        throw ConfigError("gafx-a: model dim 128 is not divisible by " + std::to_string(a.heads) + " heads");
      }
      if (a.depth == 0 || a.mlp_ratio == 0) throw ConfigError("gafx-a needs positive depth and mlp ratio");
      [[fallthrough]];
    case ExtractorKind::gafx_r:
      scaled(r.stem_channels);
      for (std::size_t s = 0; s < 4; ++s) scaled(r.stage_channels[s]);
      if (r.stage_channels[4] != kFeatureBins) throw ConfigError("last residual stage must have 128 channels");
      if (r.row_width < 8) throw ConfigError("row width too small for the residual backbone");
      return;
  }
}

int required_sample_rate(ExtractorKind kind) { return kind == ExtractorKind::gafx_u ? 16000 : 22050; }

std::size_t required_channels(ExtractorKind kind) { return kind == ExtractorKind::gafx_u ? 2 : 1; }

std::size_t full_clip_samples(ExtractorKind kind) { return kind == ExtractorKind::gafx_u ? 480000 : 661500; }

std::size_t feature_frames(const ExtractorConfig& cfg, std::size_t samples) {
  if (samples == 0) throw DimensionError("feature_frames: empty clip");
  switch (cfg.kind) {
    case ExtractorKind::none: return samples / 200 + 1;
    case ExtractorKind::gafx_u: return 4 * stft_frames(samples, cfg.u.stft);
    case ExtractorKind::gafx_r:
    case ExtractorKind::gafx_a: return ceil_div(samples, cfg.r.row_width);
  }
  return 0;
}

std::size_t count_parameters(const ExtractorConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ExtractorKind::none: return 0;
    case ExtractorKind::gafx_u: return gafxu_params(cfg);
    case ExtractorKind::gafx_r: return residual_params(cfg);
    case ExtractorKind::gafx_a: {
      const std::size_t D = kFeatureBins, M = D * cfg.a.mlp_ratio;
      const std::size_t block = 2 * D + (3 * D * D + 3 * D) + (D * D + D) + 2 * D + (D * M + M) + (M * D + D);
      return residual_params(cfg) + cfg.a.depth * block;
    }
  }
  return 0;
}

std::array<std::size_t, 6> gafxu_encoder_lengths(const ExtractorConfig& cfg, std::size_t samples) {
  std::array<std::size_t, 6> out{};
  std::size_t L = samples;
  for (auto& l : out) l = L = ceil_div(L, cfg.u.stride);
  return out;
}

std::array<std::size_t, 8> gafxr_width_trace(const ExtractorConfig& cfg) {
  std::array<std::size_t, 8> w{};
  w[0] = cfg.r.row_width;
  w[1] = ops::conv_extent(w[0], 7, 2, 6);
  w[2] = ops::conv_extent(w[1], 3, 2, 2);
  for (std::size_t s = 0; s < 5; ++s) w[3 + s] = ops::conv_extent(w[2 + s], 3, cfg.r.stage_stride_w[s], 2);
  return w;
}

}  // namespace gafx
