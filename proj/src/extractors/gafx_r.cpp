// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/extractors/gafx_r.hpp"

#include <string>

#include "gafx/error.hpp"

namespace gafx {

template <typename T>
BasicBlock<T>::BasicBlock(std::size_t in, std::size_t out, std::size_t stride_w, Rng& rng)
    : conv1(in, out, 3, 3, ops::Conv2d{1, stride_w, 1, 1, 1, 1}, rng, false),
      conv2(out, out, 3, 3, ops::Conv2d{1, 1, 1, 1, 1, 1}, rng, false),
      bn1(out),
      bn2(out),
      projection(stride_w != 1 || in != out) {
  if (projection) {
    shortcut = nn::Conv2d<T>(in, out, 1, 1, ops::Conv2d{1, stride_w, 0, 0, 0, 0}, rng, false);
    shortcut_bn = nn::BatchNorm<T>(out);
  }
}

template <typename T>
Tensor<T> BasicBlock<T>::forward(const Tensor<T>& x) {
  auto y = ops::relu(bn1.forward(conv1.forward(x)));
  y = bn2.forward(conv2.forward(y));
  const auto skip = projection ? shortcut_bn.forward(shortcut.forward(x)) : x;
  return ops::relu(ops::add(y, skip));
}

template <typename T>
void BasicBlock<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  conv1.visit(nn::join_name(prefix, "conv1"), fn);
  bn1.visit(nn::join_name(prefix, "bn1"), fn);
  conv2.visit(nn::join_name(prefix, "conv2"), fn);
  bn2.visit(nn::join_name(prefix, "bn2"), fn);
  if (projection) {
    shortcut.visit(nn::join_name(prefix, "shortcut.conv"), fn);
    shortcut_bn.visit(nn::join_name(prefix, "shortcut.bn"), fn);
  }
}

template <typename T>
void BasicBlock<T>::set_training(bool training) {
  bn1.set_training(training);
  bn2.set_training(training);
  shortcut_bn.set_training(training);
}

template <typename T>
ResidualBackbone<T>::ResidualBackbone(const ExtractorConfig& cfg, Rng& rng) : row_width(cfg.r.row_width) {
  const auto& r = cfg.r;
  const std::size_t s = cfg.scaled(r.stem_channels);
  stem = nn::Conv2d<T>(1, s, 7, 7, ops::Conv2d{1, 2, 3, 3, 3, 3}, rng, true);
  stem_bn = nn::BatchNorm<T>(s);
  std::size_t in = s;
  for (std::size_t st = 0; st < 5; ++st) {
    const std::size_t out = st == 4 ? r.stage_channels[4] : cfg.scaled(r.stage_channels[st]);
    blocks.emplace_back(in, out, r.stage_stride_w[st], rng);
    blocks.emplace_back(out, out, 1, rng);
    in = out;
  }
}

template <typename T>
Tensor<T> ResidualBackbone<T>::forward(const Tensor<T>& mono) {
  if (mono.dim() != 1) throw DimensionError("residual backbone expects [L], got " + shape_str(mono.shape()));
  const std::size_t L = mono.extent(0);
  const std::size_t rows = (L + row_width - 1) / row_width;
  const std::size_t tail = rows * row_width - L;
  const auto padded = tail ? ops::pad(mono, 0, 0, tail) : mono;
  auto x = ops::reshape(padded, {1, rows, row_width});
  x = ops::relu(stem_bn.forward(stem.forward(x)));
  x = ops::max_pool2d(x, ops::Pool2d{3, 3, 1, 2, 1, 1});
  for (auto& b : blocks) x = b.forward(x);
  return x;
}

template <typename T>
Tensor<T> ResidualBackbone<T>::tokens(const Tensor<T>& mono) {
  return ops::transpose(ops::mean(forward(mono), 2));
}

template <typename T>
void ResidualBackbone<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  stem.visit(nn::join_name(prefix, "stem.conv"), fn);
  stem_bn.visit(nn::join_name(prefix, "stem.bn"), fn);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].visit(nn::join_name(prefix, "stage" + std::to_string(i / 2 + 1) + ".block" + std::to_string(i % 2)),
                    fn);
  }
}

template <typename T>
void ResidualBackbone<T>::set_training(bool training) {
  stem_bn.set_training(training);
  for (auto& b : blocks) b.set_training(training);
}

template <typename T>
Tensor<T> mono_input(const Tensor<T>& audio, const char* who) {
  if (audio.dim() != 2 || audio.extent(0) != 1) {
    throw ContractError(std::string(who) + " needs mono input [1, L], got " + shape_str(audio.shape()) +
                        " (convert stereo clips with to_mono)");
  }
  return ops::reshape(audio, {audio.extent(1)});
}

template <typename T>
GafxR<T>::GafxR(const ExtractorConfig& cfg, Rng& rng) : Extractor<T>(cfg) {
  cfg.validate();
  backbone = ResidualBackbone<T>(cfg, rng);
}

template <typename T>
ExtractorOutput<T> GafxR<T>::forward(const Tensor<T>& audio) {
  ExtractorOutput<T> out;
  out.source = FeatureSource::gafx_r;
  out.feature = backbone.tokens(mono_input(audio, "gafx-r"));
  return out;
}

template <typename T>
void GafxR<T>::visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
  backbone.visit(nn::join_name(prefix, "backbone"), fn);
}

template Tensor<float> mono_input(const Tensor<float>&, const char*);
template Tensor<double> mono_input(const Tensor<double>&, const char*);
template class BasicBlock<float>;
template class BasicBlock<double>;
template class ResidualBackbone<float>;
template class ResidualBackbone<double>;
template class GafxR<float>;
template class GafxR<double>;

}  // namespace gafx
