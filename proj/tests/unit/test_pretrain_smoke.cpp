// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>

#include "doctest.h"
#include "gafx/training/pretrain.hpp"

namespace fs = std::filesystem;

TEST_CASE("toy pretraining reduces the loss by at least 30%") {
  const fs::path dir = fs::temp_directory_path() / "gafx_pretrain_smoke";
  fs::remove_all(dir);
  // Noise-free tones: with a noise floor the per-bin target entropy alone
  // keeps the BCE above 70% of its first-epoch value.
  gafx::synthesize_tone_corpus(dir.string(), {"a", "b", "c", "d", "e"}, 10, 10.0, 22050, 9, 0.0);
  const auto corpus = gafx::find_pretrain_corpus(dir.string());
  REQUIRE(corpus.size() == 50);

  gafx::PretrainConfig cfg;
  cfg.extractor = gafx::ExtractorKind::gafx_r;
  cfg.width_scale = 16;
  cfg.epochs = 20;
  cfg.seed = 1;
  auto r = gafx::pretrain_fit(corpus, cfg);
  REQUIRE_FALSE(r.divergence);
  REQUIRE(r.epoch_loss.size() == 20);
  MESSAGE("epoch 1 loss " << r.epoch_loss.front() << ", epoch 20 loss " << r.epoch_loss.back());
  CHECK(r.epoch_loss.back() <= 0.7 * r.epoch_loss.front());
  CHECK(r.target_max > r.target_min);

  const auto path = (dir / "pre.ckpt").string();
  gafx::save_pretrained(path, r, cfg);
  CHECK(fs::file_size(path) > 0);
}
