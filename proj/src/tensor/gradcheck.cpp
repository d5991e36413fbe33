// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gafx/tensor/nn.hpp"
#include "gafx/tensor/ops.hpp"

namespace gafx {

GradCheckOptions default_gradcheck_options(DType dtype, std::uint64_t seed) {
  GradCheckOptions o;
  o.seed = seed;
  if (dtype == DType::f32) {
    o.step = 2e-2;
    o.tolerance = 1e-3;
  } else {
    o.step = 1e-4;
    o.tolerance = 1e-6;
  }
  return o;
}

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo, double hi,
                        bool requires_grad) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>(shape, std::move(v), requires_grad);
}

template <typename T>
GradCheckResult check_gradients(const std::string& name,
                                const std::function<Tensor<T>()>& forward,
                                std::vector<Tensor<T>> probes,
                                const GradCheckOptions& options) {
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& p : probes) p.zero_grad();

  Tensor<T> y = forward();
  std::vector<double> weights(y.numel());
  for (auto& w : weights) w = rng.uniform(-1.0, 1.0);
  {
    std::vector<T> seed(weights.begin(), weights.end());
    y.backward(seed);
  }
  auto loss = [&]() {
    NoGradGuard guard;
    const Tensor<T> out = forward();
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * out[i];
    return total;
  };

  struct Probe {
    std::vector<double> analytic, numeric;
  };
  std::vector<Probe> results(probes.size());
  GradCheckResult res;
  res.name = name;
  const double h = options.step;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    auto& t = probes[p];
    std::vector<std::size_t> idx(t.numel());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > options.max_probes) {
      rng.shuffle(idx);
      idx.resize(options.max_probes);
    }
    const std::vector<T> grad(t.grad().begin(), t.grad().end());
    for (auto k : idx) {
      auto data = t.mutable_data();
      const T saved = data[k];
      auto at = [&](double delta) {
        data[k] = static_cast<T>(saved + delta);
        return loss();
      };
      const double num = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      data[k] = saved;
      results[p].numeric.push_back(num);
      results[p].analytic.push_back(grad.empty() ? 0.0 : static_cast<double>(grad[k]));
      ++res.probes;
    }
  }
  double global = 0.0;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.numeric.size(); ++i)
      global = std::max({global, std::abs(r.numeric[i]), std::abs(r.analytic[i])});
  }
  for (const auto& r : results) {
    double scale = 0.01 * global, diff = 0.0;
    for (std::size_t i = 0; i < r.numeric.size(); ++i) {
      scale = std::max({scale, std::abs(r.numeric[i]), std::abs(r.analytic[i])});
      diff = std::max(diff, std::abs(r.numeric[i] - r.analytic[i]));
    }
    if (scale == 0.0) continue;
    res.max_rel_error = std::max(res.max_rel_error, diff / scale);
  }
  res.passed = std::isfinite(res.max_rel_error) && res.max_rel_error < options.tolerance;
  return res;
}

bool GradCheckReport::passed() const {
  return !results.empty() &&
         std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << "gradcheck module=" << module << " dtype=" << dtype_name(dtype) << " seed=" << seed
     << '\n';
  for (const auto& r : results) {
    os << (r.passed ? "  PASS " : "  FAIL ") << r.name << " max_rel_err=" << r.max_rel_error
       << " probes=" << r.probes << '\n';
  }
  os << (passed() ? "all checks passed" : "gradient check FAILED") << '\n';
  return os.str();
}

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

// Values bounded away from zero, so that ReLU kinks are never crossed by the
// finite-difference stencil.
template <typename T>
Tensor<T> kink_free(const Shape& shape, Rng& rng) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) {
    const double mag = rng.uniform(0.25, 1.0);
    x = static_cast<T>(rng.uniform() < 0.5 ? -mag : mag);
  }
  return Tensor<T>(shape, std::move(v), true);
}

// Distinct values on a 0.25 grid so the arg-max of any pooling window is
// stable under the stencil.
template <typename T>
Tensor<T> distinct_values(const Shape& shape, Rng& rng) {
  std::vector<T> v(shape_numel(shape));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<T>(0.25 * static_cast<double>(i) - 0.125 * static_cast<double>(v.size()));
  rng.shuffle(v);
  return Tensor<T>(shape, std::move(v), true);
}

// Rows with variance at least 0.5: normalization ops are smooth on the scale
// of the stencil only when the row spread is not tiny.
template <typename T>
Tensor<T> spread_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<T> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double var = 0.0;
    do {
      double mu = 0.0;
      for (std::size_t j = 0; j < cols; ++j) mu += v[r * cols + j] = static_cast<T>(rng.uniform(-2, 2));
      mu /= static_cast<double>(cols);
      var = 0.0;
      for (std::size_t j = 0; j < cols; ++j) var += (v[r * cols + j] - mu) * (v[r * cols + j] - mu);
      var /= static_cast<double>(cols);
    } while (var < 0.5);
  }
  return Tensor<T>({rows, cols}, std::move(v), true);
}

template <typename T>
std::vector<GradCheckResult> tensor_core_suite(std::uint64_t seed) {
  const auto opts = default_gradcheck_options(dtype_of<T>(), seed);
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  auto check = [&](const std::string& name, std::function<Tensor<T>()> fn,
                   std::vector<Tensor<T>> probes) {
    out.push_back(check_gradients<T>(name, fn, std::move(probes), opts));
  };

  {
    const std::size_t M = pick(rng, 1, 6), K = pick(rng, 1, 7), N = pick(rng, 1, 5);
    auto a = random_tensor<T>({M, K}, rng), b = random_tensor<T>({K, N}, rng);
    check("matmul", [=] { return ops::matmul(a, b); }, {a, b});
  }
  {
    const std::size_t M = pick(rng, 1, 5), I = pick(rng, 1, 6), O = pick(rng, 1, 5);
    auto x = random_tensor<T>({M, I}, rng), w = random_tensor<T>({O, I}, rng),
         b = random_tensor<T>({O}, rng);
    check("linear", [=] { return ops::linear(x, w, b); }, {x, w, b});
  }
  {
    const std::size_t C = pick(rng, 1, 3), O = pick(rng, 1, 3), k = pick(rng, 1, 4);
    const std::size_t s = pick(rng, 1, 3), pl = pick(rng, 0, 2), pr = pick(rng, 0, 2);
    const std::size_t L = pick(rng, k + 2, 12);
    auto x = random_tensor<T>({C, L}, rng), w = random_tensor<T>({O, C, k}, rng),
         b = random_tensor<T>({O}, rng);
    check("conv1d", [=] { return ops::conv1d(x, w, b, s, pl, pr); }, {x, w, b});
  }
  {
    const std::size_t C = pick(rng, 1, 3), O = pick(rng, 1, 3);
    const std::size_t kh = pick(rng, 1, 3), kw = pick(rng, 1, 3);
    ops::Conv2d g;
    g.stride_h = pick(rng, 1, 2);
    g.stride_w = pick(rng, 1, 2);
    g.pad_top = pick(rng, 0, 1);
    g.pad_bottom = pick(rng, 0, 1);
    g.pad_left = pick(rng, 0, 1);
    g.pad_right = pick(rng, 0, 1);
    const std::size_t H = pick(rng, kh + 1, 6), W = pick(rng, kw + 1, 7);
    auto x = random_tensor<T>({C, H, W}, rng), w = random_tensor<T>({O, C, kh, kw}, rng),
         b = random_tensor<T>({O}, rng);
    check("conv2d", [=] { return ops::conv2d(x, w, b, g); }, {x, w, b});
  }
  {
    const std::size_t C = pick(rng, 1, 3), O = pick(rng, 1, 3), k = pick(rng, 2, 5);
    const std::size_t s = pick(rng, 1, 3), L = pick(rng, 2, 6);
    const std::size_t crop = pick(rng, 0, 1);
    const std::size_t full = (L - 1) * s + k;
    const std::size_t out_len = full - crop - pick(rng, 0, 1);
    auto x = random_tensor<T>({C, L}, rng), w = random_tensor<T>({C, O, k}, rng),
         b = random_tensor<T>({O}, rng);
    check("conv_transpose1d",
          [=] { return ops::conv_transpose1d(x, w, b, s, crop, out_len); }, {x, w, b});
  }
  {
    const std::size_t C = pick(rng, 1, 3), O = pick(rng, 1, 3);
    const std::size_t kh = pick(rng, 1, 3), kw = pick(rng, 2, 4);
    ops::ConvTranspose2d g;
    g.stride_h = pick(rng, 1, 2);
    g.stride_w = pick(rng, 1, 3);
    g.crop_top = pick(rng, 0, kh - 1);
    g.crop_left = pick(rng, 0, 1);
    const std::size_t H = pick(rng, 1, 4), W = pick(rng, 2, 5);
    auto x = random_tensor<T>({C, H, W}, rng), w = random_tensor<T>({C, O, kh, kw}, rng),
         b = random_tensor<T>({O}, rng);
    check("conv_transpose2d", [=] { return ops::conv_transpose2d(x, w, b, g); }, {x, w, b});
  }
  const Shape small{pick(rng, 2, 4), pick(rng, 2, 5)};
  {
    auto a = random_tensor<T>(small, rng), b = random_tensor<T>(small, rng);
    check("add", [=] { return ops::add(a, b); }, {a, b});
    check("sub", [=] { return ops::sub(a, b); }, {a, b});
    check("mul", [=] { return ops::mul(a, b); }, {a, b});
    check("scale", [=] { return ops::scale(a, -1.7); }, {a});
    check("add_scalar", [=] { return ops::add_scalar(a, 0.3); }, {a});
  }
  {
    auto x = kink_free<T>(small, rng);
    check("relu", [=] { return ops::relu(x); }, {x});
  }
  {
    auto x = random_tensor<T>(small, rng, -2.0, 2.0);
    check("gelu", [=] { return ops::gelu(x); }, {x});
    check("sigmoid", [=] { return ops::sigmoid(x); }, {x});
    check("tanh", [=] { return ops::tanh(x); }, {x});
    check("softmax", [=] { return ops::softmax(x); }, {x});
  }
  {
    auto x = random_tensor<T>({2 * pick(rng, 1, 3), pick(rng, 1, 4)}, rng, -2.0, 2.0);
    check("glu", [=] { return ops::glu(x, 0); }, {x});
  }
  {
    const std::size_t D = pick(rng, 3, 6);
    auto x = spread_rows<T>(pick(rng, 1, 4), D, rng);
    auto g = random_tensor<T>({D}, rng, 0.5, 1.5), b = random_tensor<T>({D}, rng);
    check("layer_norm", [=] { return ops::layer_norm(x, g, b); }, {x, g, b});
  }
  {
    const std::size_t C = pick(rng, 1, 3);
    auto x = random_tensor<T>({C, pick(rng, 2, 3), pick(rng, 2, 4)}, rng, -2.0, 2.0);
    auto g = random_tensor<T>({C}, rng, 0.5, 1.5), b = random_tensor<T>({C}, rng);
    auto rm = Tensor<T>::zeros({C}), rv = Tensor<T>::full({C}, T(1));
    check("batch_norm.train",
          [=]() mutable { return ops::batch_norm(x, g, b, rm, rv, true); }, {x, g, b});
    auto em = random_tensor<T>({C}, rng, -0.5, 0.5, false);
    auto ev = random_tensor<T>({C}, rng, 0.5, 2.0, false);
    check("batch_norm.eval",
          [=]() mutable { return ops::batch_norm(x, g, b, em, ev, false); }, {x, g, b});
  }
  {
    ops::Pool2d p;
    p.kernel_h = pick(rng, 1, 3);
    p.kernel_w = pick(rng, 2, 3);
    p.stride_h = pick(rng, 1, 2);
    p.stride_w = pick(rng, 1, 2);
    p.pad_h = pick(rng, 0, p.kernel_h / 2);
    p.pad_w = pick(rng, 0, p.kernel_w / 2);
    auto x = distinct_values<T>({pick(rng, 1, 2), pick(rng, 3, 5), pick(rng, 3, 6)}, rng);
    check("max_pool2d", [=] { return ops::max_pool2d(x, p); }, {x});
  }
  {
    auto x = random_tensor<T>({pick(rng, 1, 3), pick(rng, 2, 4), pick(rng, 1, 3)}, rng);
    const std::size_t axis = pick(rng, 0, 2);
    check("mean", [=] { return ops::mean(x, axis); }, {x});
    check("sum", [=] { return ops::sum(x, axis); }, {x});
    check("sum_all", [=] { return ops::sum_all(x); }, {x});
    check("mean_all", [=] { return ops::mean_all(x); }, {x});
    check("permute", [=] { return ops::permute(x, {2, 0, 1}); }, {x});
    check("reshape", [=] { return ops::reshape(x, {x.numel()}); }, {x});
    const std::size_t n = x.extent(1);
    check("slice", [=] { return ops::slice(x, 1, n / 2, n - n / 2); }, {x});
    check("pad", [=] { return ops::pad(x, 2, 1, 2); }, {x});
    auto y = random_tensor<T>({x.extent(0), pick(rng, 1, 3), x.extent(2)}, rng);
    check("concat", [=] { return ops::concat<T>({x, y}, 1); }, {x, y});
  }
  {
    auto x = random_tensor<T>({pick(rng, 2, 4), pick(rng, 2, 5)}, rng);
    check("transpose", [=] { return ops::transpose(x); }, {x});
  }
  {
    const std::size_t N = pick(rng, 1, 4), K = pick(rng, 2, 6);
    auto x = random_tensor<T>({N, K}, rng, -3.0, 3.0);
    std::vector<int> labels(N);
    for (auto& l : labels) l = static_cast<int>(rng.below(K));
    check("softmax_cross_entropy", [=] { return ops::softmax_cross_entropy<T>(x, labels); },
          {x});
  }
  {
    const Shape s{pick(rng, 1, 4), pick(rng, 1, 4)};
    auto x = random_tensor<T>(s, rng, -3.0, 3.0);
    auto t = random_tensor<T>(s, rng, 0.0, 1.0, false);
    check("bce_with_logits", [=] { return ops::bce_with_logits(x, t); }, {x});
  }
  {
    nn::BiLstm<T> lstm(4, 4, 2, rng);
    auto x = random_tensor<T>({3, 4}, rng);
    std::vector<Tensor<T>> probes{x};
    for (auto& p : nn::parameters(lstm)) probes.push_back(p);
    check("bilstm", [=] { return lstm.forward(x); }, probes);
  }
  {
    nn::MultiHeadAttention<T> mha(8, 2, rng);
    auto x = random_tensor<T>({3, 8}, rng);
    std::vector<Tensor<T>> probes{x};
    for (auto& p : nn::parameters(mha)) probes.push_back(p);
    check("multi_head_attention", [=] { return mha.forward(x); }, probes);
  }
  return out;
}

}  // namespace

GradCheckReport run_tensor_core_gradcheck(std::uint64_t seed, DType dtype) {
  GradCheckReport report;
  report.module = "tensor-core";
  report.dtype = dtype;
  report.seed = seed;
  report.results = dtype == DType::f32 ? tensor_core_suite<float>(seed)
                                       : tensor_core_suite<double>(seed);
  return report;
}

template GradCheckResult check_gradients<float>(const std::string&,
                                                const std::function<Tensor<float>()>&,
                                                std::vector<Tensor<float>>,
                                                const GradCheckOptions&);
template GradCheckResult check_gradients<double>(const std::string&,
                                                 const std::function<Tensor<double>()>&,
                                                 std::vector<Tensor<double>>,
                                                 const GradCheckOptions&);
template Tensor<float> random_tensor<float>(const Shape&, Rng&, double, double, bool);
template Tensor<double> random_tensor<double>(const Shape&, Rng&, double, double, bool);

}  // namespace gafx
