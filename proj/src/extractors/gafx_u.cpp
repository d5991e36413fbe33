// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/extractors/gafx_u.hpp"

#include <string>

#include "gafx/dsp/feature.hpp"
#include "gafx/dsp/stft.hpp"
#include "gafx/error.hpp"

namespace gafx {
namespace {

constexpr std::size_t kSources = 4;

std::size_t align_pad(std::size_t length, std::size_t stride) { return (stride - length % stride) % stride; }

}  // namespace

template <typename T>
GafxU<T>::GafxU(const ExtractorConfig& cfg, Rng& rng) : Extractor<T>(cfg) {
  cfg.validate();
  const auto& u = cfg.u;
  std::array<std::size_t, 7> c{};
  c[0] = u.input_channels;
  for (std::size_t i = 0; i < 6; ++i) c[i + 1] = cfg.scaled(u.encoder_channels[i]);
  for (std::size_t i = 1; i <= 6; ++i) {
    temporal_encoder.emplace_back(c[i - 1], 2 * c[i], u.kernel, u.stride, u.pad, rng);
    if (i < 6) {
      spectral_encoder.emplace_back(c[i - 1], 2 * c[i], 8, 1, ops::Conv2d{4, 1, 2, 2, 0, 0}, rng);
    } else {
      // Right padding of the time axis is extended per call for stride alignment.
      spectral_encoder.emplace_back(c[i - 1], 2 * c[i], 2, 8, ops::Conv2d{2, 4, 0, 0, 2, 2}, rng);
    }
  }
  bottleneck = nn::BiLstm<T>(c[6], c[6], u.lstm_layers, rng);
  for (std::size_t i = 1; i <= 6; ++i) {
    const std::size_t out = i == 1 ? u.output_channels : 2 * c[i - 1];
    temporal_decoder.emplace_back(c[i], out, u.kernel, u.stride, u.pad, rng);
    if (i < 6) {
      spectral_decoder.emplace_back(c[i], out, 8, 1, 4, 1, 2, 0, rng);
    } else {
      spectral_decoder.emplace_back(c[i], out, 2, 8, 2, 4, 0, 2, rng);
    }
  }
}

template <typename T>
ExtractorOutput<T> GafxU<T>::forward(const Tensor<T>& audio) {
  const auto& u = this->cfg_.u;
  if (audio.dim() != 2 || audio.extent(0) != 2) {
    throw ContractError("gafx-u needs stereo input [2, L], got " + shape_str(audio.shape()) +
                        " (convert mono clips with to_stereo)");
  }
  const std::size_t L = audio.extent(1);
  // When L is a multiple of the hop the STFT has one frame more than the
  // temporal branch has steps; one extra sample aligns the two branches.
  const std::size_t hop = u.stft.hop;
  const bool pad_one = L % hop == 0;
  const Tensor<T> x = pad_one ? ops::pad(audio, 1, 0, 1) : audio;
  const std::size_t Lp = x.extent(1);

  // Temporal encoder.
  std::vector<Tensor<T>> t_skip;
  std::vector<std::size_t> t_len{Lp};
  Tensor<T> t = x;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t extra = align_pad(t.extent(1), u.stride);
    t = ops::glu(temporal_encoder[i].forward(t, extra), 0);
    t_skip.push_back(t);
    t_len.push_back(t.extent(1));
  }

  // Spectral encoder on [2, bins, frames] magnitudes.
  std::vector<Tensor<T>> mags;
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const auto m = stft_magnitude(ops::reshape(ops::slice(x, 0, ch, 1), {Lp}), u.stft);
    mags.push_back(ops::reshape(ops::transpose(m), {1, m.extent(1), m.extent(0)}));
  }
  Tensor<T> z = ops::concat(mags, 0);
  const std::size_t frames = z.extent(2);
  std::vector<Tensor<T>> z_skip;
  std::vector<Shape> z_shape{z.shape()};
  for (std::size_t i = 0; i < 6; ++i) {
    if (i < 5) {
      z = spectral_encoder[i].forward(z);
    } else {
      ops::Conv2d g = spectral_encoder[i].geometry;
      g.pad_right += align_pad(z.extent(2), g.stride_w);
      z = ops::conv2d(z, spectral_encoder[i].weight, spectral_encoder[i].bias, g);
    }
    z = ops::glu(z, 0);
    z_skip.push_back(z);
    z_shape.push_back(z.shape());
  }
  const std::size_t C6 = t.extent(0), T6 = t.extent(1);
  if (z.extent(1) != 1 || z.extent(2) != T6) {
    throw DimensionError("gafx-u: branch shapes disagree at the bottleneck: temporal " + shape_str(t.shape()) +
                         ", spectral " + shape_str(z.shape()));
  }

  // Shared bottleneck.
  const auto merged = ops::add(t, ops::reshape(z, {C6, T6}));
  const auto h = ops::transpose(bottleneck.forward(ops::transpose(merged)));

  // Temporal decoder.
  Tensor<T> td = h;
  for (std::size_t i = 6; i-- > 0;) {
    if (u.skip[i]) td = ops::add(td, t_skip[i]);
    td = temporal_decoder[i].forward(td, t_len[i]);
    if (i > 0) td = ops::glu(td, 0);
  }
  // Spectral decoder.
  Tensor<T> zd = ops::reshape(h, {C6, 1, T6});
  for (std::size_t i = 6; i-- > 0;) {
    if (u.skip[i]) zd = ops::add(zd, z_skip[i]);
    zd = spectral_decoder[i].forward(zd, z_shape[i][1], z_shape[i][2]);
    if (i > 0) zd = ops::glu(zd, 0);
  }

  if (pad_one) td = ops::slice(td, 1, 0, L);
  // Channel c = source * 4 + stereo * 2 + duplicate.
  const auto stereo = ops::mean(ops::reshape(td, {kSources, 2, 2, L}), 2);  // [4, 2, L]
  const std::size_t bins = zd.extent(1);
  const auto maps = ops::mean(ops::reshape(zd, {kSources, 4, bins, frames}), 1);  // [4, bins, frames]

  ExtractorOutput<T> out;
  out.source = FeatureSource::gafx_u;
  std::vector<Tensor<T>> parts;
  for (std::size_t s = 0; s < kSources; ++s) {
    auto src = ops::reshape(ops::slice(stereo, 0, s, 1), {2, L});
    auto zmap = ops::transpose(ops::reshape(ops::slice(maps, 0, s, 1), {bins, frames}));
    const auto mono = ops::mean(src, 0);
    parts.push_back(ops::add(stft_magnitude(mono, u.stft), zmap));
    out.sources.push_back(std::move(src));
    out.spectral_maps.push_back(std::move(zmap));
  }
  out.feature = freq_group_pool(ops::concat(parts, 0), kFeatureBins);
  return out;
}

template <typename T>
void GafxU<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string n = std::to_string(i);
    temporal_encoder[i].visit(nn::join_name(prefix, "temporal_encoder." + n), fn);
    spectral_encoder[i].visit(nn::join_name(prefix, "spectral_encoder." + n), fn);
  }
  bottleneck.visit(nn::join_name(prefix, "bottleneck"), fn);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string n = std::to_string(i);
    temporal_decoder[i].visit(nn::join_name(prefix, "temporal_decoder." + n), fn);
    spectral_decoder[i].visit(nn::join_name(prefix, "spectral_decoder." + n), fn);
  }
}

template class GafxU<float>;
template class GafxU<double>;

}  // namespace gafx
