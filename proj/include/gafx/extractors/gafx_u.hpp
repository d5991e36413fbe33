// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "gafx/extractors/extractor.hpp"

namespace gafx {

// Dual U-Net: a temporal branch of strided 1-D convolutions on the stereo
// waveform and a spectral branch of 2-D convolutions on its magnitude STFT,
// summed at a BiLSTM bottleneck and decoded back with skip connections.
// The decoders' 16 channels become four stereo sources and four spectral
// maps, assembled into a [4 * frames, 128] feature.
template <typename T>
class GafxU : public Extractor<T> {
 public:
  GafxU(const ExtractorConfig& cfg, Rng& rng);

  ExtractorOutput<T> forward(const Tensor<T>& audio) override;
  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;

  std::vector<nn::Conv1d<T>> temporal_encoder;
  std::vector<nn::Conv2d<T>> spectral_encoder;
  nn::BiLstm<T> bottleneck;
  std::vector<nn::ConvTranspose1d<T>> temporal_decoder;
  std::vector<nn::ConvTranspose2d<T>> spectral_decoder;
};

}  // namespace gafx
