// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gafx/training/dataset.hpp"
#include "gafx/training/metrics.hpp"
#include "gafx/training/model.hpp"
#include "gafx/training/schedule.hpp"

namespace gafx {

struct DivergenceReport {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::string op;
  std::string detail;

  std::string message() const;
};

struct FitOptions {
  std::string metrics_path;     // JSON lines; empty disables
  std::string pretrained_path;  // extractor weights from pretrain_fit
  std::ostream* log = nullptr;
  std::size_t threads = 0;      // clip decoding workers; 0 reads GAFX_THREADS
};

struct FitResult {
  std::unique_ptr<GenreModel> model;
  Metrics metrics;
  std::optional<DivergenceReport> divergence;
  std::vector<double> lr_trace;  // one entry per optimizer step
  std::string rng_state;
};

// Worker count: `requested`, else GAFX_THREADS, else the hardware count.
std::size_t worker_threads(std::size_t requested = 0);
std::size_t memory_budget_bytes(const TrainConfig& cfg);

// Clip length is the median train-clip duration rounded to 0.1 s, expressed at
// the extractor's sample rate.
ModelConfig model_config_for(const DatasetIndex& index, const TrainConfig& cfg);

// Decodes and converts entries on worker threads; order follows `entries`.
std::vector<AudioClip> load_converted(const GenreModel& model, const std::vector<const DatasetEntry*>& entries,
                                      std::size_t threads, bool allow_resample = true);

// Clips longer than the model input are cut into consecutive windows (the
// last one zero-padded) whose logits are averaged.
std::vector<float> clip_logits(GenreModel& model, const AudioClip& converted);

// Non-finite values abort training and are returned as a divergence report;
// an over-budget configuration raises BudgetError before any allocation.
FitResult fit(const DatasetIndex& index, const TrainConfig& cfg, const FitOptions& options = {});

Metrics evaluate(GenreModel& model, const DatasetIndex& index, Split split = Split::eval,
                 std::size_t threads = 0, bool allow_resample = true);

}  // namespace gafx
