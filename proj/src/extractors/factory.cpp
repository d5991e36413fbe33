// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <string>

#include "gafx/error.hpp"
#include "gafx/extractors/gafx_a.hpp"
#include "gafx/extractors/gafx_r.hpp"
#include "gafx/extractors/gafx_u.hpp"

namespace gafx {

template <typename T>
ExtractorOutput<T> Extractor<T>::forward_clip(const AudioClip& clip) {
  clip.validate();
  const int rate = required_sample_rate(cfg_.kind);
  if (clip.sample_rate != rate) {
    throw ConfigError(std::string(extractor_kind_name(cfg_.kind)) + " expects " + std::to_string(rate) +
                      " Hz audio, got " + std::to_string(clip.sample_rate) + " Hz");
  }
  return forward(clip_tensor<T>(clip));
}

template <typename T>
Tensor<T> clip_tensor(const AudioClip& clip) {
  clip.validate();
  std::vector<T> v;
  v.reserve(clip.num_channels() * clip.length());
  for (const auto& c : clip.channels) v.insert(v.end(), c.begin(), c.end());
  return Tensor<T>({clip.num_channels(), clip.length()}, std::move(v));
}

template <typename T>
std::unique_ptr<Extractor<T>> make_extractor(const ExtractorConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case ExtractorKind::gafx_u: return std::make_unique<GafxU<T>>(cfg, rng);
    case ExtractorKind::gafx_r: return std::make_unique<GafxR<T>>(cfg, rng);
    case ExtractorKind::gafx_a: return std::make_unique<GafxA<T>>(cfg, rng);
    case ExtractorKind::none: break;
  }
  throw ConfigError("make_extractor: the mel baseline has no learnable extractor");
}

template class Extractor<float>;
template class Extractor<double>;
template Tensor<float> clip_tensor<float>(const AudioClip&);
template Tensor<double> clip_tensor<double>(const AudioClip&);
template std::unique_ptr<Extractor<float>> make_extractor<float>(const ExtractorConfig&, Rng&);
template std::unique_ptr<Extractor<double>> make_extractor<double>(const ExtractorConfig&, Rng&);

}  // namespace gafx
