// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "gafx/extractors/gafx_r.hpp"

namespace gafx {

// Residual backbone tokens plus sinusoidal positions through a stack of
// pre-norm transformer blocks.
template <typename T>
class GafxA : public Extractor<T> {
 public:
  GafxA(const ExtractorConfig& cfg, Rng& rng);
  ExtractorOutput<T> forward(const Tensor<T>& audio) override;
  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;
  void set_training(bool training) override { backbone.set_training(training); }

  ResidualBackbone<T> backbone;
  std::vector<nn::TransformerBlock<T>> blocks;
};

}  // namespace gafx
