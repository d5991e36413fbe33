// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gafx/training/trainer.hpp"

namespace gafx {

struct PretrainConfig {
  ExtractorKind extractor = ExtractorKind::gafx_r;
  std::size_t width_scale = 1;
  double lr = 5e-4;
  std::size_t batch_size = 4;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double clip_seconds = 10.0;
  std::size_t max_clips = 0;  // 0 uses every clip found

  void validate() const;
  std::string to_json() const;
};

constexpr std::size_t kPretrainFrames = 1024;

// [T, F] -> [frames, F] by linear interpolation along time with the end
// points aligned. Differentiable.
template <typename T>
Tensor<T> time_resample(const Tensor<T>& x, std::size_t frames);

// Every .wav under `dir` (recursively, sorted) lasting at least min_seconds.
std::vector<std::string> find_pretrain_corpus(const std::string& dir, double min_seconds = 10.0);

// Log-mel (1024, 128) of the clip's first clip_seconds at 16 kHz mono.
Tensor<float> pretrain_log_mel(const AudioClip& raw, double clip_seconds = 10.0);
// (x - lo) / (hi - lo), clamped to [0, 1].
Tensor<float> minmax_normalize(const Tensor<float>& x, double lo, double hi);

class PretrainModel : public nn::Module<float> {
 public:
  PretrainModel(const ExtractorConfig& cfg, Rng& rng);

  // Converts a decoded clip to the extractor's rate, layout and length.
  AudioClip prepare(const AudioClip& raw) const;
  // Per-frame logits [1024, 128] for a prepared clip.
  Tensor<float> logits(const AudioClip& prepared);

  Extractor<float>& extractor() { return *extractor_; }
  const ExtractorConfig& config() const { return cfg_; }

  void visit(const std::string& prefix, const nn::ParamVisitor<float>& fn) override;
  void set_training(bool training) override { extractor_->set_training(training); }

  nn::Linear<float> head;

 private:
  ExtractorConfig cfg_;
  std::unique_ptr<Extractor<float>> extractor_;
};

struct PretrainResult {
  std::unique_ptr<PretrainModel> model;
  std::vector<double> epoch_loss;
  double target_min = 0.0, target_max = 1.0;
  std::optional<DivergenceReport> divergence;
};

PretrainResult pretrain_fit(const std::vector<std::string>& corpus, const PretrainConfig& cfg,
                            const FitOptions& options = {});

void save_pretrained(const std::string& path, PretrainResult& result, const PretrainConfig& cfg);

}  // namespace gafx
