// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/tensor/nn.hpp"

#include <cmath>

namespace gafx::nn {

std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

template <typename T>
std::vector<Tensor<T>> parameters(Module<T>& m) {
  std::vector<Tensor<T>> out;
  m.visit("", [&](const std::string&, Tensor<T>& t, ParamKind kind) {
    if (kind == ParamKind::parameter) out.push_back(t);
  });
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> named_tensors(Module<T>& m) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  m.visit("", [&](const std::string& name, Tensor<T>& t, ParamKind) {
    out.emplace_back(name, t);
  });
  return out;
}

template <typename T>
std::size_t parameter_count(Module<T>& m) {
  std::size_t n = 0;
  for (const auto& p : parameters(m)) n += p.numel();
  return n;
}

template <typename T>
void zero_grads(Module<T>& m) {
  m.visit("", [](const std::string&, Tensor<T>& t, ParamKind) { t.zero_grad(); });
}

template <typename T>
void zero_biases(Module<T>& m) {
  m.visit("", [](const std::string& name, Tensor<T>& t, ParamKind kind) {
    if (kind == ParamKind::parameter && name.size() >= 4 &&
        name.compare(name.size() - 4, 4, "bias") == 0) {
      for (auto& v : t.mutable_data()) v = T(0);
    }
  });
}

template <typename T>
void set_requires_grad(Module<T>& m, bool flag) {
  m.visit("", [flag](const std::string&, Tensor<T>& t, ParamKind kind) {
    if (kind == ParamKind::parameter) t.set_requires_grad(flag);
  });
}

template <typename T>
void uniform_fill(Tensor<T>& t, double bound, Rng& rng) {
  for (auto& v : t.mutable_data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

namespace {
template <typename T>
void emit(const ParamVisitor<T>& fn, const std::string& prefix, const char* name,
          Tensor<T>& t, ParamKind kind = ParamKind::parameter) {
  if (t.defined()) fn(join_name(prefix, name), t, kind);
}
}  // namespace

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias) {
  weight = Tensor<T>::zeros({out, in}, true);
  uniform_fill(weight, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  if (with_bias) bias = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  return ops::linear(x, weight, bias);
}

template <typename T>
void Linear<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", weight);
  emit(fn, prefix, "bias", bias);
}

template <typename T>
Conv2d<T>::Conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw,
                  ops::Conv2d g, Rng& rng, bool with_bias)
    : geometry(g) {
  weight = Tensor<T>::zeros({out, in, kh, kw}, true);
  uniform_fill(weight, 1.0 / std::sqrt(static_cast<double>(in * kh * kw)), rng);
  if (with_bias) bias = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  return ops::conv2d(x, weight, bias, geometry);
}

template <typename T>
void Conv2d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", weight);
  emit(fn, prefix, "bias", bias);
}

template <typename T>
Conv1d<T>::Conv1d(std::size_t in, std::size_t out, std::size_t kernel,
                  std::size_t stride_, std::size_t pad_, Rng& rng, bool with_bias)
    : stride(stride_), pad(pad_) {
  weight = Tensor<T>::zeros({out, in, kernel}, true);
  uniform_fill(weight, 1.0 / std::sqrt(static_cast<double>(in * kernel)), rng);
  if (with_bias) bias = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& x, std::size_t extra_right) const {
  return ops::conv1d(x, weight, bias, stride, pad, pad + extra_right);
}

template <typename T>
void Conv1d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", weight);
  emit(fn, prefix, "bias", bias);
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(std::size_t in, std::size_t out, std::size_t kh,
                                    std::size_t kw, std::size_t sh, std::size_t sw,
                                    std::size_t ct, std::size_t cl, Rng& rng)
    : stride_h(sh), stride_w(sw), crop_top(ct), crop_left(cl) {
  weight = Tensor<T>::zeros({in, out, kh, kw}, true);
  uniform_fill(weight, 1.0 / std::sqrt(static_cast<double>(in * kh * kw)), rng);
  bias = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x, std::size_t out_h,
                                      std::size_t out_w) const {
  ops::ConvTranspose2d g;
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  g.crop_top = crop_top;
  g.crop_left = crop_left;
  g.out_h = out_h;
  g.out_w = out_w;
  return ops::conv_transpose2d(x, weight, bias, g);
}

template <typename T>
void ConvTranspose2d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", weight);
  emit(fn, prefix, "bias", bias);
}

template <typename T>
ConvTranspose1d<T>::ConvTranspose1d(std::size_t in, std::size_t out,
                                    std::size_t kernel, std::size_t stride_,
                                    std::size_t crop_, Rng& rng)
    : stride(stride_), crop(crop_) {
  weight = Tensor<T>::zeros({in, out, kernel}, true);
  uniform_fill(weight, 1.0 / std::sqrt(static_cast<double>(in * kernel)), rng);
  bias = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> ConvTranspose1d<T>::forward(const Tensor<T>& x, std::size_t out_len) const {
  return ops::conv_transpose1d(x, weight, bias, stride, crop, out_len);
}

template <typename T>
void ConvTranspose1d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", weight);
  emit(fn, prefix, "bias", bias);
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t dim, double eps_) : eps(eps_) {
  gamma = Tensor<T>::full({dim}, T(1), true);
  beta = Tensor<T>::zeros({dim}, true);
}

template <typename T>
Tensor<T> LayerNorm<T>::forward(const Tensor<T>& x) const {
  return ops::layer_norm(x, gamma, beta, eps);
}

template <typename T>
void LayerNorm<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", gamma);
  emit(fn, prefix, "bias", beta);
}

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double momentum_, double eps_)
    : momentum(momentum_), eps(eps_) {
  gamma = Tensor<T>::full({channels}, T(1), true);
  beta = Tensor<T>::zeros({channels}, true);
  running_mean = Tensor<T>::zeros({channels});
  running_var = Tensor<T>::full({channels}, T(1));
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x) {
  return ops::batch_norm(x, gamma, beta, running_mean, running_var, training_,
                         momentum, eps);
}

template <typename T>
void BatchNorm<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  emit(fn, prefix, "weight", gamma);
  emit(fn, prefix, "bias", beta);
  emit(fn, prefix, "running_mean", running_mean, ParamKind::buffer);
  emit(fn, prefix, "running_var", running_var, ParamKind::buffer);
}

template <typename T>
Tensor<T> LstmCell<T>::run(const Tensor<T>& xs, bool reverse) const {
  const std::size_t steps = xs.extent(0);
  const std::size_t H = hidden;
  const Tensor<T> gates_x = ops::linear(xs, w_ih, bias);  // [T, 4H]
  const Tensor<T> w_hh_t = ops::transpose(w_hh);          // [H, 4H]
  Tensor<T> h = Tensor<T>::zeros({1, H});
  Tensor<T> c = Tensor<T>::zeros({1, H});
  std::vector<Tensor<T>> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const Tensor<T> g =
        ops::add(ops::slice(gates_x, 0, t, 1), ops::matmul(h, w_hh_t));
    const Tensor<T> i = ops::sigmoid(ops::slice(g, 1, 0, H));
    const Tensor<T> f = ops::sigmoid(ops::slice(g, 1, H, H));
    const Tensor<T> cc = ops::tanh(ops::slice(g, 1, 2 * H, H));
    const Tensor<T> o = ops::sigmoid(ops::slice(g, 1, 3 * H, H));
    c = ops::add(ops::mul(f, c), ops::mul(i, cc));
    h = ops::mul(o, ops::tanh(c));
    outputs[t] = h;
  }
  return ops::concat(outputs, 0);
}

template <typename T>
BiLstm<T>::BiLstm(std::size_t channels, std::size_t hidden, std::size_t layers,
                  Rng& rng) {
  if (layers == 0 || hidden == 0 || channels == 0) {
    throw ConfigError("BiLstm needs positive channels, hidden size and layers");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto make = [&](std::size_t in) {
    LstmCell<T> cell;
    cell.hidden = hidden;
    cell.w_ih = Tensor<T>::zeros({4 * hidden, in}, true);
    cell.w_hh = Tensor<T>::zeros({4 * hidden, hidden}, true);
    cell.bias = Tensor<T>::zeros({4 * hidden}, true);
    uniform_fill(cell.w_ih, bound, rng);
    uniform_fill(cell.w_hh, bound, rng);
    uniform_fill(cell.bias, bound, rng);
    return cell;
  };
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = l == 0 ? channels : 2 * hidden;
    forward_cells.push_back(make(in));
    backward_cells.push_back(make(in));
  }
  projection = Linear<T>(2 * hidden, channels, rng);
}

template <typename T>
Tensor<T> BiLstm<T>::recurrent(const Tensor<T>& x) const {
  if (x.dim() != 2 || x.extent(0) == 0) {
    throw DimensionError("BiLstm expects a non-empty [T, C] sequence, got " +
                         shape_str(x.shape()));
  }
  Tensor<T> h = x;
  for (std::size_t l = 0; l < forward_cells.size(); ++l) {
    h = ops::concat<T>({forward_cells[l].run(h, false), backward_cells[l].run(h, true)}, 1);
  }
  return h;
}

template <typename T>
Tensor<T> BiLstm<T>::forward(const Tensor<T>& x) const {
  return projection.forward(recurrent(x));
}

template <typename T>
void BiLstm<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  for (std::size_t l = 0; l < forward_cells.size(); ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      auto& cell = dir == 0 ? forward_cells[l] : backward_cells[l];
      const std::string p =
          join_name(prefix, "layer" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd"));
      emit(fn, p, "w_ih", cell.w_ih);
      emit(fn, p, "w_hh", cell.w_hh);
      emit(fn, p, "bias", cell.bias);
    }
  }
  projection.visit(join_name(prefix, "proj"), fn);
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(std::size_t dim_, std::size_t heads_, Rng& rng)
    : dim(dim_), heads(heads_) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention dim " + std::to_string(dim) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  qkv = Linear<T>(dim, 3 * dim, rng);
  proj = Linear<T>(dim, dim, rng);
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::forward(const Tensor<T>& x,
                                         std::vector<Tensor<T>>* weights) const {
  if (x.dim() != 2 || x.extent(1) != dim) {
    throw DimensionError("attention expects [T, " + std::to_string(dim) + "], got " +
                         shape_str(x.shape()));
  }
  const std::size_t dh = dim / heads;
  const Tensor<T> packed = qkv.forward(x);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor<T>> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor<T> q = ops::slice(packed, 1, h * dh, dh);
    const Tensor<T> k = ops::slice(packed, 1, dim + h * dh, dh);
    const Tensor<T> v = ops::slice(packed, 1, 2 * dim + h * dh, dh);
    const Tensor<T> a = ops::softmax(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt));
    if (weights) weights->push_back(a);
    outs.push_back(ops::matmul(a, v));
  }
  return proj.forward(heads == 1 ? outs.front() : ops::concat(outs, 1));
}

template <typename T>
void MultiHeadAttention<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  qkv.visit(join_name(prefix, "qkv"), fn);
  proj.visit(join_name(prefix, "proj"), fn);
}

template <typename T>
TransformerBlock<T>::TransformerBlock(std::size_t dim, std::size_t heads,
                                      std::size_t mlp_ratio, Rng& rng)
    : ln1(dim), ln2(dim), attn(dim, heads, rng),
      fc1(dim, dim * mlp_ratio, rng), fc2(dim * mlp_ratio, dim, rng) {}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(const Tensor<T>& x,
                                       std::vector<Tensor<T>>* weights) const {
  const Tensor<T> h = ops::add(x, attn.forward(ln1.forward(x), weights));
  return ops::add(h, fc2.forward(ops::gelu(fc1.forward(ln2.forward(h)))));
}

template <typename T>
void TransformerBlock<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  ln1.visit(join_name(prefix, "norm1"), fn);
  attn.visit(join_name(prefix, "attn"), fn);
  ln2.visit(join_name(prefix, "norm2"), fn);
  fc1.visit(join_name(prefix, "mlp.fc1"), fn);
  fc2.visit(join_name(prefix, "mlp.fc2"), fn);
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t length, std::size_t dim) {
  std::vector<T> table(length * dim);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      table[t * dim + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return Tensor<T>({length, dim}, std::move(table));
}

#define GAFX_INSTANTIATE(T)                                                     \
  template std::vector<Tensor<T>> parameters(Module<T>&);                      \
  template std::vector<std::pair<std::string, Tensor<T>>> named_tensors(       \
      Module<T>&);                                                              \
  template std::size_t parameter_count(Module<T>&);                            \
  template void zero_grads(Module<T>&);                                        \
  template void zero_biases(Module<T>&);                                       \
  template void set_requires_grad(Module<T>&, bool);                           \
  template void uniform_fill(Tensor<T>&, double, Rng&);                        \
  template class Linear<T>;                                                    \
  template class Conv2d<T>;                                                    \
  template class Conv1d<T>;                                                    \
  template class ConvTranspose2d<T>;                                           \
  template class ConvTranspose1d<T>;                                           \
  template class LayerNorm<T>;                                                 \
  template class BatchNorm<T>;                                                 \
  template struct LstmCell<T>;                                                 \
  template class BiLstm<T>;                                                    \
  template class MultiHeadAttention<T>;                                        \
  template class TransformerBlock<T>;                                          \
  template Tensor<T> sinusoidal_positions<T>(std::size_t, std::size_t);

GAFX_INSTANTIATE(float)
GAFX_INSTANTIATE(double)

#undef GAFX_INSTANTIATE

}  // namespace gafx::nn
