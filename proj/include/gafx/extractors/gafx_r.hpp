// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "gafx/extractors/extractor.hpp"

namespace gafx {

// Two 3x3 convolutions with batch norm and an identity or 1x1 projection
// shortcut.
template <typename T>
class BasicBlock : public nn::Module<T> {
 public:
  BasicBlock() = default;
  BasicBlock(std::size_t in, std::size_t out, std::size_t stride_w, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;
  void set_training(bool training) override;

  nn::Conv2d<T> conv1, conv2, shortcut;
  nn::BatchNorm<T> bn1, bn2, shortcut_bn;
  bool projection = false;
};

// Waveform rows of `row_width` samples as a one-channel image, then a 7x7
// stem, max pool and five stages of two basic blocks; [C, rows, W'].
template <typename T>
class ResidualBackbone : public nn::Module<T> {
 public:
  ResidualBackbone() = default;
  ResidualBackbone(const ExtractorConfig& cfg, Rng& rng);
  Tensor<T> forward(const Tensor<T>& mono);
  // [rows, 128] after averaging the width axis.
  Tensor<T> tokens(const Tensor<T>& mono);
  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;
  void set_training(bool training) override;

  nn::Conv2d<T> stem;
  nn::BatchNorm<T> stem_bn;
  std::vector<BasicBlock<T>> blocks;
  std::size_t row_width = 200;
};

template <typename T>
class GafxR : public Extractor<T> {
 public:
  GafxR(const ExtractorConfig& cfg, Rng& rng);
  ExtractorOutput<T> forward(const Tensor<T>& audio) override;
  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;
  void set_training(bool training) override { backbone.set_training(training); }

  ResidualBackbone<T> backbone;
};

}  // namespace gafx
