// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gafx/extractors/config.hpp"

namespace gafx {

struct TrainConfig {
  std::size_t batch_size = 4;
  double base_lr = 5e-5;
  std::size_t epochs = 80;
  std::size_t warmup_steps = 800;
  std::vector<std::size_t> decay_epochs{12, 24, 50, 65};  // 0-indexed epochs
  double decay_factor = 0.5;
  std::uint64_t seed = 0;

  ExtractorKind extractor = ExtractorKind::gafx_u;
  std::size_t width_scale = 1;
  std::string classifier = "deit-tiny";
  std::size_t classifier_depth = 0;  // 0 keeps the preset depth
  bool joint_finetune = true;
  // Resample and remix clips to the extractor's input format. When off, a
  // manifest whose clips do not already match is rejected.
  bool resample = true;

  // Training aborts with BudgetError when the estimated working set exceeds
  // this many MiB; 0 reads GAFX_MEMORY_BUDGET_MB (default 3072).
  std::size_t memory_budget_mb = 0;
  // Stop after the first epoch whose train accuracy reaches this (0 off).
  double stop_at_train_accuracy = 0.0;
  // Debug: overwrite one parameter with NaN before this step (1-based, 0 off).
  std::size_t nan_inject_step = 0;

  void validate() const;
  std::string to_json() const;
  // Unknown keys raise ConfigError; absent keys keep their defaults.
  static TrainConfig from_json(const std::string& text);
};

// Linear warm-up over steps 1..warmup_steps, then base * factor^k where k is
// the number of decay epochs <= epoch. `step` counts optimizer steps from 1.
double lr_at(std::size_t step, std::size_t epoch, const TrainConfig& cfg);

std::size_t steps_per_epoch(std::size_t train_clips, std::size_t batch_size);

}  // namespace gafx
