// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gafx/classifier/ast.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/gradcheck.hpp"

using gafx::AstClassifier;
using gafx::AstConfig;
using gafx::Rng;
using gafx::Tensor;

namespace {

AstConfig miniature(std::size_t time_steps, std::size_t depth = 2) {
  AstConfig c;
  c.name = "mini";
  c.time_steps = time_steps;
  c.embed_dim = 16;
  c.heads = 2;
  c.depth = depth;
  return c;
}

template <typename T>
Tensor<T> features(std::size_t t, std::uint64_t seed) {
  Rng rng(seed);
  return gafx::random_tensor<T>({t, 128}, rng, -1.0, 1.0, false);
}

template <typename T>
void randomize_positions(AstClassifier<T>& m, Rng& rng) {
  for (auto& v : m.pos_embed.mutable_data()) v = static_cast<T>(rng.uniform(-0.5, 0.5));
}

}  // namespace

TEST_CASE("patch grid arithmetic") {
  const auto r = gafx::patch_grid(3308);
  CHECK(r.padded_time == 3312);
  CHECK(r.rows == 207);
  CHECK(r.cols == 8);
  CHECK(r.count() == 1656);
  const auto u = gafx::patch_grid(1876);
  CHECK(u.padded_time == 1888);
  CHECK(u.rows == 118);
  CHECK(u.count() == 944);
  for (std::size_t t = 1; t < 400; ++t) {
    const auto g = gafx::patch_grid(t);
    CHECK(g.padded_time == 16 * ((t + 15) / 16));
    CHECK(g.cols == 8);
  }
}

TEST_CASE("patchify layout") {
  SUBCASE("zero input gives eight zero tokens") {
    const auto p = gafx::patchify(Tensor<float>::zeros({16, 128}));
    CHECK(p.shape() == gafx::Shape{8, 256});
    for (float v : p.data()) CHECK(v == 0.0f);
  }
  SUBCASE("row-major grid with time-major patches") {
    std::vector<double> v(40 * 128);
    std::iota(v.begin(), v.end(), 0.0);
    const Tensor<double> x({40, 128}, v);
    const auto p = gafx::patchify(x);
    REQUIRE(p.shape() == gafx::Shape{24, 256});
    for (std::size_t n = 0; n < 24; ++n) {
      const std::size_t pr = n / 8, pc = n % 8;
      for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t j = 0; j < 16; ++j) {
          const std::size_t t = pr * 16 + i, f = pc * 16 + j;
          const double want = t < 40 ? static_cast<double>(t * 128 + f) : 0.0;
          CHECK(p[n * 256 + i * 16 + j] == want);
        }
      }
    }
  }
  SUBCASE("wrong frequency width") {
    Rng rng(1);
    AstClassifier<float> m(miniature(32), rng);
    CHECK_THROWS_AS(m.forward(Tensor<float>::zeros({32, 64})), gafx::ContractError);
    CHECK_THROWS_AS(m.forward(Tensor<float>::zeros({48, 128})), gafx::ConfigError);
  }
}

TEST_CASE("config validation and presets") {
  CHECK(gafx::deit_tiny(3308).embed_dim == 192);
  CHECK(gafx::deit_tiny(3308).heads == 3);
  CHECK(gafx::deit_small(3308).embed_dim == 384);
  CHECK(gafx::deit_small(3308).heads == 6);
  CHECK(gafx::deit_small(3308).depth == 12);
  CHECK_THROWS_AS(gafx::ast_preset("deit-base", 100), gafx::ConfigError);
  auto bad = miniature(32);
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), gafx::ConfigError);
}

TEST_CASE("parameter counts match the closed form") {
  Rng rng(2);
  for (std::size_t t : {16, 33, 100}) {
    AstClassifier<float> m(miniature(t, 3), rng);
    CHECK(gafx::count_parameters(m.config()) == gafx::nn::parameter_count(m));
  }
  for (const auto& cfg : {gafx::deit_tiny(3308), gafx::deit_small(1876)}) {
    AstClassifier<float> m(cfg, rng);
    CHECK(gafx::count_parameters(cfg) == gafx::nn::parameter_count(m));
  }
}

TEST_CASE("full-size forwards give ten logits") {
  Rng rng(3);
  gafx::NoGradGuard ng;
  for (const auto& cfg : {gafx::deit_tiny(3308), gafx::deit_small(3308)}) {
    AstClassifier<float> m(cfg, rng);
    const auto logits = m.forward(features<float>(3308, 4));
    CHECK(logits.shape() == gafx::Shape{10});
    const auto p = gafx::ops::softmax(gafx::ops::reshape(logits, {1, 10}));
    double s = 0.0;
    for (float v : p.data()) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("token count is preserved through every block") {
  Rng rng(5);
  AstClassifier<float> m(miniature(50, 4), rng);
  gafx::NoGradGuard ng;
  auto x = m.patch_embed.forward(gafx::patchify(features<float>(50, 6)));
  x = gafx::ops::add(gafx::ops::concat(std::vector<Tensor<float>>{m.cls_token, x}, 0), m.pos_embed);
  const gafx::Shape want{4 * 8 + 1, 16};
  CHECK(x.shape() == want);
  for (const auto& b : m.blocks) {
    x = b.forward(x);
    CHECK(x.shape() == want);
  }
  CHECK(m.encode(features<float>(50, 6)).shape() == want);
}

TEST_CASE("permuting head rows permutes logits") {
  Rng rng(7);
  AstClassifier<double> m(miniature(32), rng);
  gafx::NoGradGuard ng;
  const auto x = features<double>(32, 8);
  const auto before = m.forward(x);
  const std::vector<std::size_t> perm{3, 7, 0, 9, 1, 5, 2, 8, 6, 4};
  const auto w = m.head.weight.data();
  const auto b = m.head.bias.data();
  std::vector<double> w2(w.size()), b2(b.size());
  const std::size_t D = 16;
  for (std::size_t k = 0; k < 10; ++k) {
    for (std::size_t d = 0; d < D; ++d) w2[k * D + d] = w[perm[k] * D + d];
    b2[k] = b[perm[k]];
  }
  std::copy(w2.begin(), w2.end(), m.head.weight.mutable_data().begin());
  std::copy(b2.begin(), b2.end(), m.head.bias.mutable_data().begin());
  const auto after = m.forward(x);
  for (std::size_t k = 0; k < 10; ++k) CHECK(after[k] == before[perm[k]]);
}

TEST_CASE("shuffled patches change the logits") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    Rng rng(seed);
    AstClassifier<double> m(miniature(32), rng);
    randomize_positions(m, rng);
    gafx::NoGradGuard ng;
    const auto x = features<double>(32, seed);
    // Swap the two 16-row time blocks, which swaps whole patch rows.
    std::vector<double> swapped(x.numel());
    const auto d = x.data();
    for (std::size_t i = 0; i < 16 * 128; ++i) {
      swapped[i] = d[16 * 128 + i];
      swapped[16 * 128 + i] = d[i];
    }
    const auto a = m.forward(x);
    const auto b = m.forward(Tensor<double>({32, 128}, swapped));
    double diff = 0.0;
    for (std::size_t k = 0; k < 10; ++k) diff = std::max(diff, std::abs(a[k] - b[k]));
    CHECK(diff > 1e-9);
  }
}

TEST_CASE("miniature gradients match finite differences") {
  Rng rng(20);
  AstClassifier<double> m(miniature(32), rng);
  randomize_positions(m, rng);
  Rng xr(21);
  const auto x = gafx::random_tensor<double>({32, 128}, xr);
  auto opts = gafx::default_gradcheck_options(gafx::DType::f64, 4);
  opts.tolerance = 1e-3;
  opts.max_probes = 16;
  std::vector<Tensor<double>> probes{x};
  for (auto& p : gafx::nn::parameters(m)) probes.push_back(p);
  const auto res = gafx::check_gradients<double>("ast-mini", [&] { return m.forward(x); }, probes, opts);
  INFO(res.max_rel_error);
  CHECK(res.passed);
  CHECK(res.max_rel_error < 1e-6);
}
