// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "gafx/dsp/stft.hpp"
#include "gafx/error.hpp"
#include "gafx/extractors/gafx_a.hpp"
#include "gafx/extractors/gafx_r.hpp"
#include "gafx/extractors/gafx_u.hpp"
#include "gafx/tensor/gradcheck.hpp"

using gafx::ExtractorConfig;
using gafx::ExtractorKind;
using gafx::Rng;
using gafx::Tensor;

namespace {

ExtractorConfig toy(ExtractorKind kind, std::size_t width_scale) {
  ExtractorConfig cfg;
  cfg.kind = kind;
  cfg.width_scale = width_scale;
  return cfg;
}

template <typename T>
Tensor<T> audio(std::size_t channels, std::size_t length, std::uint64_t seed, double amp = 0.5) {
  Rng rng(seed);
  std::vector<T> v(channels * length);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-amp, amp));
  return Tensor<T>({channels, length}, std::move(v));
}

template <typename T>
Tensor<T> weighted_loss(const Tensor<T>& y, std::uint64_t seed) {
  Rng rng(seed);
  auto r = gafx::random_tensor<T>(y.shape(), rng, -1.0, 1.0, false);
  return gafx::ops::sum_all(gafx::ops::mul(y, r));
}

bool all_zero(const Tensor<float>& t) {
  for (float v : t.data()) {
    if (v != 0.0f) return false;
  }
  return true;
}

bool identical(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) return false;
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    if (da[i] != db[i]) return false;
  }
  return true;
}

// Every parameter must receive a gradient with nonzero norm.
template <typename T>
void check_gradient_flow(gafx::Extractor<T>& ex, const Tensor<T>& x, std::uint64_t seed) {
  gafx::nn::zero_grads(ex);
  auto out = ex.forward(x);
  weighted_loss(out.feature, seed + 1000).backward();
  ex.visit("", [&](const std::string& name, Tensor<T>& p, gafx::nn::ParamKind kind) {
    if (kind != gafx::nn::ParamKind::parameter) return;
    double norm = 0.0;
    if (p.has_grad()) {
      for (T g : p.grad()) norm += static_cast<double>(g) * static_cast<double>(g);
    }
    INFO("parameter " << name << " seed " << seed);
    CHECK(norm > 0.0);
  });
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK(gafx::parse_extractor_kind("gafx-u") == ExtractorKind::gafx_u);
  CHECK(gafx::parse_extractor_kind("gafx-r") == ExtractorKind::gafx_r);
  CHECK(gafx::parse_extractor_kind("gafx-a") == ExtractorKind::gafx_a);
  CHECK(gafx::parse_extractor_kind("none") == ExtractorKind::none);
  CHECK_THROWS_AS(gafx::parse_extractor_kind("gafx-x"), gafx::ConfigError);

  ExtractorConfig cfg;
  cfg.kind = ExtractorKind::gafx_u;
  CHECK(cfg.u.encoder_channels == std::array<std::size_t, 6>{48, 96, 192, 384, 768, 1536});
  CHECK(cfg.u.output_channels == 4 * 2 * 2);
  CHECK(cfg.r.stage_channels == std::array<std::size_t, 5>{64, 128, 256, 512, 128});
  CHECK(cfg.a.depth == 2);
  CHECK(gafx::kFeatureBins % cfg.a.heads == 0);
  CHECK_NOTHROW(cfg.validate());

  for (auto kind : {ExtractorKind::gafx_u, ExtractorKind::gafx_r, ExtractorKind::gafx_a}) {
    auto huge = toy(kind, std::size_t{1} << 20);
    CHECK_THROWS_AS(huge.validate(), gafx::ConfigError);
    auto zero = toy(kind, 0);
    CHECK_THROWS_AS(zero.validate(), gafx::ConfigError);
  }
}

TEST_CASE("closed-form parameter counts") {
  // R stem: 7*7*1*64 + 64.
  auto r = toy(ExtractorKind::gafx_r, 1);
  Rng rng(1);
  gafx::ResidualBackbone<float> backbone(r, rng);
  CHECK(gafx::nn::parameter_count(backbone.stem) == 3200);

  for (auto kind : {ExtractorKind::gafx_u, ExtractorKind::gafx_r, ExtractorKind::gafx_a}) {
    for (std::size_t ws : {8, 16, 48}) {
      auto cfg = toy(kind, ws);
      auto ex = gafx::make_extractor<float>(cfg, rng);
      INFO(gafx::extractor_kind_name(kind) << " width_scale " << ws);
      CHECK(gafx::count_parameters(cfg) == gafx::nn::parameter_count(*ex));
    }
  }
}

TEST_CASE("GAFX-U temporal layer 1 has 1632 parameters at full width") {
  // GLU doubles 48 to 96 pre-gate: 8*2*96 + 96.
  Rng rng(2);
  gafx::GafxU<float> u(toy(ExtractorKind::gafx_u, 1), rng);
  CHECK(gafx::nn::parameter_count(u.temporal_encoder.front()) == 1632);
  CHECK(gafx::count_parameters(toy(ExtractorKind::gafx_u, 1)) == gafx::nn::parameter_count(u));
}

TEST_CASE("GAFX-U length formulas") {
  const auto full = gafx::gafxu_encoder_lengths(toy(ExtractorKind::gafx_u, 1), 480000);
  CHECK(full == std::array<std::size_t, 6>{120000, 30000, 7500, 1875, 469, 118});
  const auto small = gafx::gafxu_encoder_lengths(toy(ExtractorKind::gafx_u, 16), 16000);
  CHECK(small == std::array<std::size_t, 6>{4000, 1000, 250, 63, 16, 4});
  CHECK(gafx::feature_frames(toy(ExtractorKind::gafx_u, 1), 480000) == 1876);
  CHECK(gafx::feature_frames(toy(ExtractorKind::gafx_u, 16), 16000) == 64);
  CHECK(gafx::feature_frames(toy(ExtractorKind::gafx_r, 1), 661500) == 3308);
  CHECK(gafx::feature_frames(toy(ExtractorKind::gafx_a, 1), 661500) == 3308);
  CHECK(gafx::feature_frames(toy(ExtractorKind::none, 1), 661500) == 3308);
}

TEST_CASE("GAFX-U toy forward shapes") {
  auto cfg = toy(ExtractorKind::gafx_u, 16);
  for (std::uint64_t seed : {1, 2}) {
    Rng rng(seed);
    gafx::GafxU<float> u(cfg, rng);
    gafx::NoGradGuard ng;
    const auto out = u.forward(audio<float>(2, 16000, seed + 10));
    CHECK(out.feature.shape() == gafx::Shape{64, 128});
    REQUIRE(out.sources.size() == 4);
    REQUIRE(out.spectral_maps.size() == 4);
    for (const auto& s : out.sources) CHECK(s.shape() == gafx::Shape{2, 16000});
    for (const auto& m : out.spectral_maps) CHECK(m.shape() == gafx::Shape{16, 2048});
  }
  // Lengths that are hop multiples take the one-sample alignment pad.
  Rng rng(3);
  gafx::GafxU<float> u(cfg, rng);
  gafx::NoGradGuard ng;
  const auto out = u.forward(audio<float>(2, 16384, 4));
  CHECK(out.feature.shape() == gafx::Shape{4 * 17, 128});
  CHECK(out.sources[0].shape() == gafx::Shape{2, 16384});
}

TEST_CASE("GAFX-U zero input gives a zero feature") {
  Rng rng(5);
  gafx::GafxU<float> u(toy(ExtractorKind::gafx_u, 16), rng);
  gafx::nn::zero_biases(u);
  gafx::NoGradGuard ng;
  const auto out = u.forward(Tensor<float>::zeros({2, 16000}));
  CHECK(all_zero(out.feature));
  for (const auto& s : out.sources) CHECK(all_zero(s));
}

TEST_CASE("GAFX-U feature assembly matches the composition of its aux outputs") {
  Rng rng(6);
  gafx::GafxU<float> u(toy(ExtractorKind::gafx_u, 16), rng);
  gafx::NoGradGuard ng;
  const auto out = u.forward(audio<float>(2, 16000, 7));
  const auto stft_cfg = u.config().u.stft;
  const std::size_t frames = 16, bins = 2048, groups = 128, width = bins / groups;

  std::vector<float> expected;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto src = out.sources[s].data();
    std::vector<float> mono(16000);
    for (std::size_t i = 0; i < mono.size(); ++i) mono[i] = (src[i] + src[16000 + i]) / 2.0f;
    const auto spec = gafx::stft(std::span<const float>(mono), stft_cfg);
    const auto zmap = out.spectral_maps[s].data();
    std::vector<float> full(frames * bins);
    for (std::size_t k = 0; k < full.size(); ++k) full[k] = static_cast<float>(std::abs(spec.values[k])) + zmap[k];
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t g = 0; g < groups; ++g) {
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += full[t * bins + g * width + j];
        expected.push_back(static_cast<float>(acc / static_cast<double>(width)));
      }
    }
  }
  const auto got = out.feature.data();
  REQUIRE(got.size() == expected.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < got.size(); ++i) mismatches += got[i] != expected[i];
  CHECK(mismatches == 0);
}

TEST_CASE("GAFX-U disabling any skip changes the output") {
  const auto x = audio<float>(2, 16000, 8);
  auto base_cfg = toy(ExtractorKind::gafx_u, 16);
  Tensor<float> base;
  {
    Rng rng(9);
    gafx::GafxU<float> u(base_cfg, rng);
    gafx::NoGradGuard ng;
    base = u.forward(x).feature;
  }
  for (std::size_t i = 0; i < 6; ++i) {
    auto cfg = base_cfg;
    cfg.u.skip[i] = false;
    Rng rng(9);
    gafx::GafxU<float> u(cfg, rng);
    gafx::NoGradGuard ng;
    INFO("skip " << i);
    CHECK_FALSE(identical(base, u.forward(x).feature));
  }
}

TEST_CASE("GAFX-U input contracts") {
  Rng rng(10);
  gafx::GafxU<float> u(toy(ExtractorKind::gafx_u, 16), rng);
  CHECK_THROWS_AS(u.forward(audio<float>(1, 16000, 1)), gafx::ContractError);
  auto clip = gafx::make_clip(std::vector<float>(16000, 0.1f), 16000);
  CHECK_THROWS_AS(u.forward_clip(clip), gafx::ContractError);
  auto stereo22 = gafx::to_stereo(gafx::make_clip(std::vector<float>(22050, 0.1f), 22050));
  CHECK_THROWS_AS(u.forward_clip(stereo22), gafx::ConfigError);
  gafx::NoGradGuard ng;
  CHECK(u.forward_clip(gafx::to_stereo(clip)).feature.shape() == gafx::Shape{64, 128});
}

TEST_CASE("GAFX-R width trace and shapes") {
  const auto trace = gafx::gafxr_width_trace(toy(ExtractorKind::gafx_r, 1));
  CHECK(trace == std::array<std::size_t, 8>{200, 100, 50, 50, 25, 13, 7, 4});

  Rng rng(11);
  gafx::GafxR<float> r(toy(ExtractorKind::gafx_r, 16), rng);
  gafx::NoGradGuard ng;
  const auto maps = r.backbone.forward(gafx::ops::reshape(audio<float>(1, 2000, 12), {2000}));
  CHECK(maps.shape() == gafx::Shape{128, 10, 4});
  CHECK(r.forward(audio<float>(1, 2000, 12)).feature.shape() == gafx::Shape{10, 128});
  CHECK(r.forward(audio<float>(1, 2001, 12)).feature.shape() == gafx::Shape{11, 128});
}

TEST_CASE("GAFX-R full-length clip at reduced width gives (3308, 128)") {
  Rng rng(13);
  gafx::GafxR<float> r(toy(ExtractorKind::gafx_r, 16), rng);
  gafx::NoGradGuard ng;
  CHECK(r.forward(audio<float>(1, 661500, 14)).feature.shape() == gafx::Shape{3308, 128});
}

TEST_CASE("GAFX-R zero input in eval mode gives a zero feature") {
  Rng rng(15);
  gafx::GafxR<float> r(toy(ExtractorKind::gafx_r, 16), rng);
  gafx::nn::zero_biases(r);
  r.set_training(false);
  gafx::NoGradGuard ng;
  CHECK(all_zero(r.forward(Tensor<float>::zeros({1, 4000})).feature));
}

TEST_CASE("GAFX-R and GAFX-A reject stereo input") {
  Rng rng(16);
  for (auto kind : {ExtractorKind::gafx_r, ExtractorKind::gafx_a}) {
    auto ex = gafx::make_extractor<float>(toy(kind, 16), rng);
    CHECK_THROWS_AS(ex->forward(audio<float>(2, 2000, 1)), gafx::ContractError);
    auto clip = gafx::to_stereo(gafx::make_clip(std::vector<float>(2000, 0.1f), 22050));
    CHECK_THROWS_AS(ex->forward_clip(clip), gafx::ContractError);
  }
}

TEST_CASE("GAFX-A attention rows sum to one at every layer") {
  for (std::uint64_t seed : {17, 18, 19}) {
    Rng rng(seed);
    gafx::GafxA<float> a(toy(ExtractorKind::gafx_a, 16), rng);
    a.capture_attention = true;
    gafx::NoGradGuard ng;
    const auto out = a.forward(audio<float>(1, 3000, seed));
    CHECK(out.feature.shape() == gafx::Shape{15, 128});
    REQUIRE(out.attention.size() == 2 * 4);
    for (const auto& w : out.attention) {
      REQUIRE(w.shape() == gafx::Shape{15, 15});
      for (std::size_t i = 0; i < 15; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 15; ++j) s += w[i * 15 + j];
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
    }
  }
}

TEST_CASE("GAFX-A single token: attention weight is 1 and mixing reduces to the value path") {
  Rng rng(20);
  gafx::GafxA<double> a(toy(ExtractorKind::gafx_a, 16), rng);
  a.capture_attention = true;
  gafx::NoGradGuard ng;
  const auto x = audio<double>(1, 150, 21);
  const auto out = a.forward(x);
  CHECK(out.feature.shape() == gafx::Shape{1, 128});
  for (const auto& w : out.attention) {
    REQUIRE(w.numel() == 1);
    CHECK(w[0] == 1.0);
  }

  // Replay the blocks with attention replaced by proj(V).
  auto h = a.backbone.tokens(gafx::ops::reshape(x, {150}));
  h = gafx::ops::add(h, gafx::nn::sinusoidal_positions<double>(1, 128));
  for (auto& b : a.blocks) {
    const auto n1 = b.ln1.forward(h);
    const auto v = gafx::ops::slice(b.attn.qkv.forward(n1), 1, 2 * 128, 128);
    h = gafx::ops::add(h, b.attn.proj.forward(v));
    const auto n2 = b.ln2.forward(h);
    h = gafx::ops::add(h, b.fc2.forward(gafx::ops::gelu(b.fc1.forward(n2))));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 128; ++i) worst = std::max(worst, std::abs(h[i] - out.feature[i]));
  CHECK(worst <= 1e-12);
}

TEST_CASE("gradients reach every parameter") {
  SUBCASE("gafx-u") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      gafx::GafxU<float> u(toy(ExtractorKind::gafx_u, 16), rng);
      check_gradient_flow<float>(u, audio<float>(2, 16000, seed + 50), seed);
    }
  }
  SUBCASE("gafx-r") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      gafx::GafxR<float> r(toy(ExtractorKind::gafx_r, 16), rng);
      r.set_training(false);
      check_gradient_flow<float>(r, audio<float>(1, 4000, seed + 60), seed);
    }
  }
  SUBCASE("gafx-a") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      gafx::GafxA<float> a(toy(ExtractorKind::gafx_a, 16), rng);
      a.set_training(false);
      check_gradient_flow<float>(a, audio<float>(1, 4000, seed + 70), seed);
    }
  }
}

TEST_CASE("extractor gradients match finite differences") {
  auto opts = gafx::default_gradcheck_options(gafx::DType::f64, 3);
  opts.max_probes = 12;
  {
    // A bias probe shifts a whole channel, so some pre-ReLU value always sits
    // within 1e-4 of the kink; a smaller step keeps the stencil on one side.
    auto relu_opts = opts;
    relu_opts.step = 1e-7;
    Rng rng(30);
    gafx::GafxR<double> r(toy(ExtractorKind::gafx_r, 32), rng);
    r.set_training(false);
    const auto x = audio<double>(1, 800, 31).set_requires_grad(true);
    auto params = gafx::nn::parameters(r);
    std::vector<Tensor<double>> probes{x, params.front(), params[params.size() / 2], params.back()};
    const auto res = gafx::check_gradients<double>(
        "gafx-r", [&] { return r.forward(x).feature; }, probes, relu_opts);
    INFO(res.max_rel_error);
    CHECK(res.passed);
  }
  {
    Rng rng(32);
    gafx::GafxU<double> u(toy(ExtractorKind::gafx_u, 48), rng);
    const auto x = audio<double>(2, 8000, 33).set_requires_grad(true);
    auto params = gafx::nn::parameters(u);
    std::vector<Tensor<double>> probes{x, params[0], params[params.size() / 2], params.back()};
    const auto res = gafx::check_gradients<double>(
        "gafx-u", [&] { return u.forward(x).feature; }, probes, opts);
    INFO(res.max_rel_error);
    CHECK(res.passed);
  }
}

TEST_CASE("forward is deterministic under a fixed seed") {
  for (auto kind : {ExtractorKind::gafx_u, ExtractorKind::gafx_r, ExtractorKind::gafx_a}) {
    const std::size_t channels = gafx::required_channels(kind);
    const auto x = audio<float>(channels, 16000, 40);
    Tensor<float> first;
    for (int run = 0; run < 2; ++run) {
      Rng rng(41);
      auto ex = gafx::make_extractor<float>(toy(kind, 16), rng);
      gafx::NoGradGuard ng;
      auto y = ex->forward(x).feature;
      if (run == 0) {
        first = y;
      } else {
        CHECK(identical(first, y));
      }
    }
  }
}
