// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gafx/error.hpp"
#include "gafx/tensor/adam.hpp"
#include "gafx/tensor/gradcheck.hpp"
#include "gafx/tensor/nn.hpp"
#include "gafx/tensor/ops.hpp"

using gafx::Rng;
using gafx::Shape;
using T64 = gafx::Tensor<double>;
using T32 = gafx::Tensor<float>;
namespace ops = gafx::ops;
namespace nn = gafx::nn;

namespace {

template <typename V>
void check_values(std::span<const V> got, const std::vector<double>& want, double tol = 0.0) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

// Naive reference convolution in double.
std::vector<double> naive_conv2d(const T64& x, const T64& w, const ops::Conv2d& g) {
  const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
  const std::size_t O = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  const std::size_t Ho = (H + g.pad_top + g.pad_bottom - kh) / g.stride_h + 1;
  const std::size_t Wo = (W + g.pad_left + g.pad_right - kw) / g.stride_w + 1;
  std::vector<double> y(O * Ho * Wo, 0.0);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t a = 0; a < kh; ++a)
            for (std::size_t b = 0; b < kw; ++b) {
              const long r = static_cast<long>(i * g.stride_h + a) - static_cast<long>(g.pad_top);
              const long s = static_cast<long>(j * g.stride_w + b) - static_cast<long>(g.pad_left);
              if (r < 0 || s < 0 || r >= static_cast<long>(H) || s >= static_cast<long>(W))
                continue;
              acc += x[(c * H + r) * W + s] * w[((o * C + c) * kh + a) * kw + b];
            }
        y[(o * Ho + i) * Wo + j] = acc;
      }
  return y;
}

}  // namespace

TEST_CASE("tensor construction validates shape") {
  CHECK_THROWS_AS(T64({2, 0}, {}), gafx::DimensionError);
  CHECK_THROWS_AS(T64({2, 2}, {1, 2, 3}), gafx::DimensionError);
  const T64 t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.extent(1) == 3);
}

TEST_CASE("non-finite forward values are surfaced") {
  const T64 x({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}, true);
  CHECK_THROWS_AS(ops::relu(x), gafx::NonFiniteError);
  const T64 big({1}, {1e308});
  CHECK_THROWS_AS(ops::scale(big, 10.0), gafx::NonFiniteError);
}

TEST_CASE("matmul examples") {
  const T64 id({2, 2}, {1, 0, 0, 1}), b({2, 2}, {3, 4, 5, 6});
  check_values(ops::matmul(id, b).data(), {3, 4, 5, 6});
  const T64 r({1, 2}, {1, 2}), c({2, 1}, {3, 4});
  check_values(ops::matmul(r, c).data(), {11});
  CHECK_THROWS_AS(ops::matmul(r, r), gafx::DimensionError);
}

TEST_CASE("matmul 5x7x3 gradient vs finite differences") {
  Rng rng(11);
  auto a64 = gafx::random_tensor<double>({5, 7}, rng), b64 = gafx::random_tensor<double>({7, 3}, rng);
  auto r64 = gafx::check_gradients<double>("matmul", [&] { return ops::matmul(a64, b64); },
                                           {a64, b64}, {1e-4, 1e-7, 64, 1});
  CHECK(r64.max_rel_error < 1e-7);
  auto a32 = gafx::random_tensor<float>({5, 7}, rng), b32 = gafx::random_tensor<float>({7, 3}, rng);
  auto r32 = gafx::check_gradients<float>("matmul", [&] { return ops::matmul(a32, b32); },
                                          {a32, b32}, {5e-2, 1e-4, 64, 1});
  CHECK(r32.max_rel_error < 1e-4);
}

TEST_CASE("conv2d identity kernel and reference") {
  Rng rng(3);
  auto x = gafx::random_tensor<double>({1, 4, 5}, rng);
  const T64 w({1, 1, 1, 1}, {1.0});
  auto y = ops::conv2d(x, w, T64{}, {});
  check_values(y.data(), std::vector<double>(x.data().begin(), x.data().end()));

  for (int trial = 0; trial < 10; ++trial) {
    ops::Conv2d g{1 + rng.below(2), 1 + rng.below(3), rng.below(2), rng.below(3),
                  rng.below(2), rng.below(2)};
    auto xi = gafx::random_tensor<double>({2, 6, 7}, rng);
    auto wi = gafx::random_tensor<double>({3, 2, 1 + rng.below(3), 1 + rng.below(3)}, rng);
    check_values(ops::conv2d(xi, wi, T64{}, g).data(), naive_conv2d(xi, wi, g), 1e-12);
  }
}

TEST_CASE("conv2d width chain of the residual backbone") {
  CHECK(ops::conv_extent(200, 7, 2, 6) == 100);
  CHECK(ops::conv_extent(100, 3, 2, 2) == 50);
  std::size_t w = 50;
  std::vector<std::size_t> chain;
  for (int i = 0; i < 3; ++i) chain.push_back(w = ops::conv_extent(w, 3, 2, 2));
  CHECK(chain == std::vector<std::size_t>{25, 13, 7});
  CHECK(ops::conv_extent(7, 3, 2, 2) == 4);
  CHECK_THROWS_AS(ops::conv_extent(3, 7, 1, 2), gafx::DimensionError);
}

TEST_CASE("conv extents match the closed form over a sweep") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(5), s = 1 + rng.below(4), p = rng.below(3);
    const std::size_t L = k + rng.below(20);
    auto x = T64::zeros({1, L}), w = T64::zeros({1, 1, k});
    const auto y = ops::conv1d(x, w, T64{}, s, p, p);
    CHECK(y.extent(1) == (L + 2 * p - k) / s + 1);
    auto x2 = T64::zeros({1, L, L + 1});
    auto w2 = T64::zeros({1, 1, k, k});
    const auto y2 = ops::conv2d(x2, w2, T64{}, {s, s, p, p, p, p});
    CHECK(y2.extent(1) == (L + 2 * p - k) / s + 1);
    CHECK(y2.extent(2) == (L + 1 + 2 * p - k) / s + 1);
  }
}

TEST_CASE("conv1d identity kernel and length formula") {
  Rng rng(2);
  auto x = gafx::random_tensor<double>({1, 9}, rng);
  auto y = ops::conv1d(x, T64({1, 1, 1}, {1.0}), T64{}, 1, 0, 0);
  check_values(y.data(), std::vector<double>(x.data().begin(), x.data().end()));
  std::size_t L = 480000;
  std::vector<std::size_t> lengths;
  for (int i = 0; i < 5; ++i) lengths.push_back(L = ops::conv_extent(L, 8, 4, 4));
  // The plain formula floors at the fourth layer; the extractor aligns the
  // input to the stride to obtain 469 there.
  CHECK(lengths == std::vector<std::size_t>{120000, 30000, 7500, 1875, 468});
}

TEST_CASE("elementwise examples") {
  const T64 x({3}, {-1, 0, 2});
  check_values(ops::relu(x).data(), {0, 0, 2});
  const T64 c({2, 4}, {3, 3, 3, 3, -1, -1, -1, -1});
  check_values(ops::layer_norm(c, T64{}, T64{}).data(), std::vector<double>(8, 0.0));

  Rng rng(9);
  auto g = gafx::random_tensor<double>({6, 3}, rng);
  auto y = ops::glu(g, 0);
  REQUIRE(y.shape() == Shape{3, 3});
  for (std::size_t i = 0; i < 9; ++i) {
    const double a = g[i], b = g[i + 9];
    CHECK(y[i] == doctest::Approx(a / (1.0 + std::exp(-b))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(ops::glu(T64::zeros({3, 2}), 0), gafx::DimensionError);
}

TEST_CASE("softmax and layer norm row properties") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = gafx::random_tensor<float>({4, 1 + rng.below(30)}, rng, -20.0, 20.0, false);
    auto s = ops::softmax(x);
    const std::size_t n = x.extent(1);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += s[r * n + j];
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
    auto xl = gafx::random_tensor<double>({3, 2 + rng.below(60)}, rng, -5.0, 5.0, false);
    const std::size_t m = xl.extent(1);
    auto row_stats = [m](const T64& t, std::size_t r) {
      double mu = 0.0, var = 0.0;
      for (std::size_t j = 0; j < m; ++j) mu += t[r * m + j];
      mu /= static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) var += (t[r * m + j] - mu) * (t[r * m + j] - mu);
      return std::pair{mu, var / static_cast<double>(m)};
    };
    auto exact = ops::layer_norm(xl, T64{}, T64{}, 0.0);
    auto with_eps = ops::layer_norm(xl, T64{}, T64{}, 1e-5);
    for (std::size_t r = 0; r < 3; ++r) {
      const auto [mu, var] = row_stats(exact, r);
      CHECK(std::abs(mu) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-4);
      // With eps the output variance is v / (v + eps) for input variance v.
      const double v_in = row_stats(xl, r).second;
      const auto [mu_e, var_e] = row_stats(with_eps, r);
      CHECK(std::abs(mu_e) < 1e-6);
      CHECK(std::abs(var_e - v_in / (v_in + 1e-5)) < 1e-10);
    }
  }
}

TEST_CASE("batch norm running statistics") {
  const T64 x({1, 4}, {1, 2, 3, 4});
  auto rm = T64::zeros({1}), rv = T64::full({1}, 1.0);
  auto y = ops::batch_norm(x, T64{}, T64{}, rm, rv, true, 0.1, 0.0);
  CHECK(rm[0] == doctest::Approx(0.25));
  // Unbiased variance 5/3.
  CHECK(rv[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  CHECK(y[0] == doctest::Approx(-1.5 / std::sqrt(1.25)));
  auto ev = ops::batch_norm(x, T64{}, T64{}, rm, rv, false, 0.1, 0.0);
  CHECK(ev[3] == doctest::Approx((4.0 - 0.25) / std::sqrt(rv[0])));
}

TEST_CASE("max pool picks window maxima") {
  const T64 x({1, 2, 4}, {1, 5, 2, 0, 3, 4, 9, 8});
  ops::Pool2d p{2, 2, 1, 2, 0, 0};
  check_values(ops::max_pool2d(x, p).data(), {5, 9});
  ops::Pool2d padded{3, 3, 1, 2, 1, 1};
  auto y = ops::max_pool2d(x, padded);
  CHECK(y.shape() == Shape{1, 2, 2});
  check_values(y.data(), {5, 9, 5, 9});
}

TEST_CASE("cross entropy examples") {
  const T64 uniform = T64::zeros({2, 10});
  const std::vector<int> labels{3, 7};
  CHECK(ops::softmax_cross_entropy<double>(uniform, labels).item() ==
        doctest::Approx(std::log(10.0)).epsilon(1e-12));
  std::vector<double> v(10, 0.0);
  v[0] = 100.0;
  const std::vector<int> zero{0};
  CHECK(ops::softmax_cross_entropy<double>(T64({1, 10}, v), zero).item() < 1e-30);
  const std::vector<int> bad{10};
  CHECK_THROWS_AS(ops::softmax_cross_entropy<double>(T64::zeros({1, 10}), bad),
                  gafx::ContractError);

  // Gradient equals (softmax - one_hot) / N.
  Rng rng(4);
  auto z = gafx::random_tensor<double>({2, 5}, rng);
  const std::vector<int> l{1, 4};
  ops::softmax_cross_entropy<double>(z, l).backward();
  auto s = ops::softmax(z.detach());
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 5; ++k) {
      const double want = (s[r * 5 + k] - (static_cast<int>(k) == l[r] ? 1.0 : 0.0)) / 2.0;
      CHECK(z.grad()[r * 5 + k] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("bce with logits examples") {
  const T64 zero = T64::zeros({1});
  CHECK(ops::bce_with_logits(zero, T64::full({1}, 0.5)).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(ops::bce_with_logits(zero, zero).item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(ops::bce_with_logits(zero, T64::full({1}, 1.5)), gafx::ContractError);
  CHECK_THROWS_AS(ops::bce_with_logits(zero, T64::zeros({2})), gafx::DimensionError);
}

TEST_CASE("backward twice accumulates twice the gradient") {
  Rng rng(8);
  auto a = gafx::random_tensor<double>({3, 4}, rng), b = gafx::random_tensor<double>({4, 2}, rng);
  auto loss = ops::sum_all(ops::tanh(ops::matmul(a, b)));
  loss.backward();
  const std::vector<double> once(a.grad().begin(), a.grad().end());
  loss.backward();
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(a.grad()[i] == 2.0 * once[i]);
}

TEST_CASE("tape is topologically ordered") {
  const T64 a({2}, {1, 2}, true), b({2}, {3, 4}, true);
  auto c = ops::mul(a, b);
  auto d = ops::add(c, a);
  auto e = ops::sum_all(d);
  const auto tape = gafx::Tape<double>::record(e);
  const auto seq = tape.sequence();
  for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i - 1] < seq[i]);
  const auto names = tape.op_names();
  REQUIRE(names.size() >= 5);
  CHECK(names.back() == "sum_all");
  const auto pos = [&](const char* op) {
    return std::find(names.begin(), names.end(), op) - names.begin();
  };
  CHECK(pos("mul") < pos("add"));
  CHECK(pos("add") < static_cast<long>(names.size()) - 1);
}

TEST_CASE("no-grad guard disables recording") {
  const T64 a({2}, {1, 2}, true);
  gafx::NoGradGuard guard;
  auto y = ops::scale(a, 2.0);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("bilstm trivial cases") {
  Rng rng(1);
  nn::BiLstm<double> lstm(4, 4, 2, rng);
  for (auto& p : nn::parameters(lstm)) std::fill(p.mutable_data().begin(), p.mutable_data().end(), 0.0);
  auto y = lstm.forward(T64::zeros({5, 4}));
  for (auto v : y.data()) CHECK(v == 0.0);

  // Length-1 sequence: each direction is a single cell step from zero state.
  nn::BiLstm<double> one(3, 2, 1, rng);
  auto x = gafx::random_tensor<double>({1, 3}, rng);
  auto rec = one.recurrent(x);
  REQUIRE(rec.shape() == Shape{1, 4});
  auto step = [&](const nn::LstmCell<double>& c) {
    std::vector<double> h(2);
    for (std::size_t j = 0; j < 2; ++j) {
      double g[4];
      for (std::size_t q = 0; q < 4; ++q) {
        double acc = c.bias[q * 2 + j];
        for (std::size_t i = 0; i < 3; ++i) acc += c.w_ih[(q * 2 + j) * 3 + i] * x[i];
        g[q] = acc;
      }
      const double in = 1.0 / (1.0 + std::exp(-g[0])), cell = std::tanh(g[2]);
      const double out = 1.0 / (1.0 + std::exp(-g[3]));
      h[j] = out * std::tanh(in * cell);
    }
    return h;
  };
  const auto hf = step(one.forward_cells[0]), hb = step(one.backward_cells[0]);
  CHECK(rec[0] == doctest::Approx(hf[0]).epsilon(1e-12));
  CHECK(rec[1] == doctest::Approx(hf[1]).epsilon(1e-12));
  CHECK(rec[2] == doctest::Approx(hb[0]).epsilon(1e-12));
  CHECK(rec[3] == doctest::Approx(hb[1]).epsilon(1e-12));
}

TEST_CASE("attention trivial cases") {
  Rng rng(6);
  CHECK_THROWS_AS(nn::MultiHeadAttention<double>(10, 3, rng), gafx::ConfigError);
  nn::MultiHeadAttention<double> mha(8, 2, rng);
  std::vector<T64> w;
  auto single = gafx::random_tensor<double>({1, 8}, rng);
  auto y = mha.forward(single, &w);
  REQUIRE(w.size() == 2);
  for (const auto& m : w) CHECK(m[0] == 1.0);
  // With one token, output = proj(v) where v is the value slice of qkv.
  auto qkv = mha.qkv.forward(single);
  auto v = ops::slice(qkv, 1, 16, 8);
  auto want = mha.proj.forward(v);
  for (std::size_t i = 0; i < 8; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-12));

  std::vector<double> row(8);
  for (auto& r : row) r = rng.uniform(-1, 1);
  std::vector<double> same;
  for (int t = 0; t < 4; ++t) same.insert(same.end(), row.begin(), row.end());
  w.clear();
  mha.forward(T64({4, 8}, same), &w);
  for (const auto& m : w)
    for (auto p : m.data()) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("adam examples") {
  SUBCASE("first step moves by lr in the sign direction") {
    gafx::AdamState<double> st;
    st.options.eps = 0.0;
    std::vector<T64> p{T64({3}, {1.0, 2.0, 3.0}, true)};
    const std::vector<double> g{0.5, -3.0, 1e-3};
    const std::span<const double> gs[] = {g};
    gafx::adam_step<double>(p, gs, st, 0.01);
    check_values(p[0].data(), {0.99, 2.01, 2.99}, 1e-12);
    CHECK(st.step_count == 1);
  }
  SUBCASE("zero gradient leaves everything unchanged") {
    gafx::AdamState<double> st;
    std::vector<T64> p{T64({2}, {1.0, -2.0}, true)};
    const std::vector<double> g{0.0, 0.0};
    const std::span<const double> gs[] = {g};
    gafx::adam_step<double>(p, gs, st, 0.1);
    check_values(p[0].data(), {1.0, -2.0});
    check_values(std::span<const double>(st.m[0]), {0.0, 0.0});
    check_values(std::span<const double>(st.v[0]), {0.0, 0.0});
  }
  SUBCASE("x squared descends") {
    gafx::AdamState<double> st;
    std::vector<T64> p{T64({1}, {1.0}, true)};
    double prev = 1.0;
    for (int i = 0; i < 10; ++i) {
      p[0].zero_grad();
      ops::sum_all(ops::mul(p[0], p[0])).backward();
      gafx::adam_step<double>(p, st, 0.1);
      CHECK(std::abs(p[0][0]) < prev);
      prev = std::abs(p[0][0]);
    }
    CHECK(st.step_count == 10);
  }
  SUBCASE("size mismatch is rejected") {
    gafx::AdamState<double> st;
    std::vector<T64> p{T64({2}, {1.0, 2.0})};
    const std::vector<double> g{1.0};
    const std::span<const double> gs[] = {g};
    CHECK_THROWS_AS(gafx::adam_step<double>(p, gs, st, 0.1), gafx::DimensionError);
  }
  SUBCASE("zero learning rate is bit-identical") {
    gafx::AdamState<float> st;
    std::vector<T32> p{T32({2}, {0.1f, -7.3f}, true)};
    const std::vector<float> g{0.3f, 2.0f};
    const std::span<const float> gs[] = {g};
    gafx::adam_step<float>(p, gs, st, 0.0);
    CHECK(p[0][0] == 0.1f);
    CHECK(p[0][1] == -7.3f);
  }
}

TEST_CASE("tensor-core gradient suite, several seeds") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto dt : {gafx::DType::f64, gafx::DType::f32}) {
      const auto report = gafx::run_tensor_core_gradcheck(seed, dt);
      for (const auto& r : report.results) {
        INFO(r.name << " seed " << seed << " " << gafx::dtype_name(dt) << " err "
                    << r.max_rel_error);
        CHECK(r.passed);
      }
    }
  }
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    Rng rng(42);
    nn::TransformerBlock<float> block(16, 4, 4, rng);
    auto x = gafx::random_tensor<float>({5, 16}, rng);
    auto y = block.forward(x);
    ops::sum_all(y).backward();
    std::vector<float> out(y.data().begin(), y.data().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  CHECK(run() == run());
}
