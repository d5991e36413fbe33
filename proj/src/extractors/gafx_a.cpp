// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/extractors/gafx_a.hpp"

#include <string>

namespace gafx {

template <typename T>
Tensor<T> mono_input(const Tensor<T>& audio, const char* who);

template <typename T>
GafxA<T>::GafxA(const ExtractorConfig& cfg, Rng& rng) : Extractor<T>(cfg) {
  cfg.validate();
  backbone = ResidualBackbone<T>(cfg, rng);
  for (std::size_t i = 0; i < cfg.a.depth; ++i) blocks.emplace_back(kFeatureBins, cfg.a.heads, cfg.a.mlp_ratio, rng);
}

template <typename T>
ExtractorOutput<T> GafxA<T>::forward(const Tensor<T>& audio) {
  ExtractorOutput<T> out;
  out.source = FeatureSource::gafx_a;
  auto x = backbone.tokens(mono_input(audio, "gafx-a"));
  x = ops::add(x, nn::sinusoidal_positions<T>(x.extent(0), x.extent(1)));
  for (auto& b : blocks) x = b.forward(x, this->capture_attention ? &out.attention : nullptr);
  out.feature = x;
  return out;
}

template <typename T>
void GafxA<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  backbone.visit(nn::join_name(prefix, "backbone"), fn);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit(nn::join_name(prefix, "attention." + std::to_string(i)), fn);
}

template class GafxA<float>;
template class GafxA<double>;

}  // namespace gafx
