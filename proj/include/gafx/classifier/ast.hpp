// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "gafx/tensor/nn.hpp"

namespace gafx {

struct PatchGrid {
  std::size_t rows = 0, cols = 0;
  std::size_t padded_time = 0;
  std::size_t count() const { return rows * cols; }
};

// Non-overlapping square patches; time is zero-padded up to a multiple of the
// patch size.
PatchGrid patch_grid(std::size_t time_steps, std::size_t freq_bins = 128, std::size_t patch = 16);

struct AstConfig {
  std::string name = "deit-tiny";
  std::size_t patch = 16;
  std::size_t freq_bins = 128;
  std::size_t time_steps = 0;  // input T; fixes the positional table size
  std::size_t embed_dim = 192;
  std::size_t heads = 3;
  std::size_t depth = 12;
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 10;

  PatchGrid grid() const { return patch_grid(time_steps, freq_bins, patch); }
  void validate() const;
};

AstConfig deit_tiny(std::size_t time_steps);
AstConfig deit_small(std::size_t time_steps);
// "deit-tiny" or "deit-small"; throws ConfigError otherwise.
AstConfig ast_preset(const std::string& name, std::size_t time_steps);

std::size_t count_parameters(const AstConfig& cfg);

// [T, F] -> [N, patch*patch], row-major over the grid, each patch flattened
// time-major.
template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::size_t patch = 16);

template <typename T>
class AstClassifier : public nn::Module<T> {
 public:
  AstClassifier(const AstConfig& cfg, Rng& rng);

  const AstConfig& config() const { return cfg_; }

  // [T, F] -> logits [num_classes].
  Tensor<T> forward(const Tensor<T>& features) const;
  // Tokens after the final layer norm, [N + 1, D].
  Tensor<T> encode(const Tensor<T>& features) const;

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override;

  nn::Linear<T> patch_embed;
  Tensor<T> cls_token;  // [1, D]
  Tensor<T> pos_embed;  // [N + 1, D], zero-initialized
  std::vector<nn::TransformerBlock<T>> blocks;
  nn::LayerNorm<T> norm;
  nn::Linear<T> head;

 private:
  AstConfig cfg_;
};

}  // namespace gafx
