// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/classifier/ast.hpp"

#include <cmath>

#include "gafx/error.hpp"

namespace gafx {

PatchGrid patch_grid(std::size_t time_steps, std::size_t freq_bins, std::size_t patch) {
  if (patch == 0 || freq_bins % patch != 0) {
    throw ConfigError("patch size " + std::to_string(patch) + " does not divide " + std::to_string(freq_bins) +
                      " frequency bins");
  }
  PatchGrid g;
  g.rows = (time_steps + patch - 1) / patch;
  g.cols = freq_bins / patch;
  g.padded_time = g.rows * patch;
  return g;
}

void AstConfig::validate() const {
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    throw ConfigError(name + ": embed_dim " + std::to_string(embed_dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (time_steps == 0) throw ConfigError(name + ": time_steps must be positive");
  if (depth == 0 || mlp_ratio == 0 || num_classes == 0) throw ConfigError(name + ": depth, mlp_ratio, num_classes > 0");
  (void)grid();
}

AstConfig deit_tiny(std::size_t time_steps) {
  AstConfig c;
  c.name = "deit-tiny";
  c.time_steps = time_steps;
  return c;
}

AstConfig deit_small(std::size_t time_steps) {
  AstConfig c;
  c.name = "deit-small";
  c.time_steps = time_steps;
  c.embed_dim = 384;
  c.heads = 6;
  return c;
}

AstConfig ast_preset(const std::string& name, std::size_t time_steps) {
  if (name == "deit-tiny") return deit_tiny(time_steps);
  if (name == "deit-small") return deit_small(time_steps);
  throw ConfigError("unknown classifier '" + name + "' (expected deit-tiny or deit-small)");
}

std::size_t count_parameters(const AstConfig& cfg) {
  cfg.validate();
  const std::size_t D = cfg.embed_dim, M = cfg.mlp_ratio * D, P = cfg.patch * cfg.patch;
  const std::size_t tokens = cfg.grid().count() + 1;
  const std::size_t block = 2 * D + (3 * D * D + 3 * D) + (D * D + D) + 2 * D + (D * M + M) + (M * D + D);
  return (P * D + D) + D + tokens * D + cfg.depth * block + 2 * D + (D * cfg.num_classes + cfg.num_classes);
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::size_t patch) {
  if (x.dim() != 2) throw ContractError("patchify expects [T, F], got " + shape_str(x.shape()));
  const auto g = patch_grid(x.extent(0), x.extent(1), patch);
  const std::size_t tail = g.padded_time - x.extent(0);
  const auto padded = tail ? ops::pad(x, 0, 0, tail) : x;
  const auto blocks = ops::reshape(padded, {g.rows, patch, g.cols, patch});
  return ops::reshape(ops::permute(blocks, {0, 2, 1, 3}), {g.count(), patch * patch});
}

template <typename T>
AstClassifier<T>::AstClassifier(const AstConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t D = cfg_.embed_dim;
  patch_embed = nn::Linear<T>(cfg_.patch * cfg_.patch, D, rng);
  cls_token = Tensor<T>::zeros({1, D}, true);
  // N(0, 0.02^2), the DeiT class-token init.
  for (auto& v : cls_token.mutable_data()) v = static_cast<T>(0.02 * rng.normal());
  pos_embed = Tensor<T>::zeros({cfg_.grid().count() + 1, D}, true);
  for (std::size_t i = 0; i < cfg_.depth; ++i) blocks.emplace_back(D, cfg_.heads, cfg_.mlp_ratio, rng);
  norm = nn::LayerNorm<T>(D);
  head = nn::Linear<T>(D, cfg_.num_classes, rng);
}

template <typename T>
Tensor<T> AstClassifier<T>::encode(const Tensor<T>& features) const {
  if (features.dim() != 2 || features.extent(1) != cfg_.freq_bins) {
    throw ContractError(cfg_.name + " expects features [T, " + std::to_string(cfg_.freq_bins) + "], got " +
                        shape_str(features.shape()));
  }
  if (features.extent(0) != cfg_.time_steps) {
    throw ConfigError(cfg_.name + " was built for " + std::to_string(cfg_.time_steps) + " time steps, got " +
                      std::to_string(features.extent(0)));
  }
  auto x = patch_embed.forward(patchify(features, cfg_.patch));
  x = ops::add(ops::concat(std::vector<Tensor<T>>{cls_token, x}, 0), pos_embed);
  for (const auto& b : blocks) x = b.forward(x);
  return norm.forward(x);
}

template <typename T>
Tensor<T> AstClassifier<T>::forward(const Tensor<T>& features) const {
  const auto cls = ops::slice(encode(features), 0, 0, 1);
  return ops::reshape(head.forward(cls), {cfg_.num_classes});
}

template <typename T>
void AstClassifier<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  patch_embed.visit(nn::join_name(prefix, "patch_embed"), fn);
  fn(nn::join_name(prefix, "cls_token"), cls_token, nn::ParamKind::parameter);
  fn(nn::join_name(prefix, "pos_embed"), pos_embed, nn::ParamKind::parameter);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit(nn::join_name(prefix, "blocks." + std::to_string(i)), fn);
  norm.visit(nn::join_name(prefix, "norm"), fn);
  head.visit(nn::join_name(prefix, "head"), fn);
}

template Tensor<float> patchify(const Tensor<float>&, std::size_t);
template Tensor<double> patchify(const Tensor<double>&, std::size_t);
template class AstClassifier<float>;
template class AstClassifier<double>;

}  // namespace gafx
