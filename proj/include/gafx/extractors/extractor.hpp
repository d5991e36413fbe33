// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <vector>

#include "gafx/dsp/audio_clip.hpp"
#include "gafx/dsp/feature.hpp"
#include "gafx/extractors/config.hpp"
#include "gafx/tensor/nn.hpp"

namespace gafx {

template <typename T>
struct ExtractorOutput {
  Tensor<T> feature;  // [T, 128]
  FeatureSource source = FeatureSource::gafx_r;
  // GAFX-U only: the four separated stereo sources [2, L] and the four
  // spectral decoder maps [frames, 2048] that enter feature assembly.
  std::vector<Tensor<T>> sources;
  std::vector<Tensor<T>> spectral_maps;
  // GAFX-A only: per-layer, per-head attention matrices when requested.
  std::vector<Tensor<T>> attention;
};

template <typename T>
class Extractor : public nn::Module<T> {
 public:
  explicit Extractor(ExtractorConfig cfg) : cfg_(std::move(cfg)) {}

  const ExtractorConfig& config() const { return cfg_; }

  // audio is [channels, L].
  virtual ExtractorOutput<T> forward(const Tensor<T>& audio) = 0;

  // Checks sample rate and channel layout against the extractor kind.
  ExtractorOutput<T> forward_clip(const AudioClip& clip);

  // When set, forward also records attention matrices (GAFX-A).
  bool capture_attention = false;

 protected:
  ExtractorConfig cfg_;
};

// [channels, L] tensor of a clip's samples.
template <typename T>
Tensor<T> clip_tensor(const AudioClip& clip);

template <typename T>
std::unique_ptr<Extractor<T>> make_extractor(const ExtractorConfig& cfg, Rng& rng);

}  // namespace gafx
