// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gafx/classifier/ast.hpp"
#include "gafx/dsp/feature.hpp"
#include "gafx/extractors/extractor.hpp"
#include "gafx/training/checkpoint.hpp"

namespace gafx {

struct ModelConfig {
  ExtractorConfig extractor;  // kind none selects the mel baseline
  std::string classifier = "deit-tiny";
  std::size_t classifier_depth = 0;  // 0 keeps the preset depth
  std::size_t num_classes = 10;
  std::size_t input_samples = 0;  // per clip, at input_rate()

  int input_rate() const { return required_sample_rate(extractor.kind); }
  std::size_t input_channels() const { return required_channels(extractor.kind); }
  std::size_t time_steps() const { return feature_frames(extractor, input_samples); }
  AstConfig ast() const;
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  bool operator==(const ModelConfig& o) const { return to_json() == o.to_json(); }
};

// Feature extractor (or the fixed mel front end) followed by the patch
// transformer. Preprocessing is derived from the extractor kind.
class GenreModel : public nn::Module<float> {
 public:
  GenreModel(const ModelConfig& cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  bool has_extractor() const { return extractor_ != nullptr; }
  Extractor<float>& extractor() { return *extractor_; }
  AstClassifier<float>& classifier() { return *classifier_; }

  // Resamples and remixes a decoded clip to the model's rate and channel
  // layout. With allow_resample off a rate mismatch is a ConfigError.
  AudioClip convert(const AudioClip& raw, bool allow_resample = true) const;
  // convert, then pad or truncate to input_samples.
  AudioClip prepare(const AudioClip& raw, bool allow_resample = true) const {
    return fit_length(convert(raw, allow_resample), cfg_.input_samples);
  }

  // Normalized [T, 128] classifier input for a prepared clip.
  Tensor<float> features(const AudioClip& prepared);
  // Mel baseline only: the log-mel map before normalization.
  Tensor<float> baseline_spectrogram(const AudioClip& prepared) const;
  Tensor<float> normalize_baseline(const Tensor<float>& log_mel) const;

  Tensor<float> logits(const AudioClip& prepared) { return classifier_->forward(features(prepared)); }
  int predict(const AudioClip& prepared);

  void visit(const std::string& prefix, const nn::ParamVisitor<float>& fn) override;
  void set_training(bool training) override;

  NormStats norm;  // mel-baseline feature statistics from the training split

 private:
  ModelConfig cfg_;
  std::unique_ptr<Extractor<float>> extractor_;
  std::unique_ptr<AstClassifier<float>> classifier_;
};

int argmax(std::span<const float> v);

// Approximate peak bytes for one training step: parameters with gradients and
// Adam moments plus forward activations and their gradients.
std::size_t estimate_training_bytes(const ModelConfig& cfg);

CheckpointFile model_checkpoint(GenreModel& model, const std::string& extra_json = "{}",
                                const std::string& rng_state = "");
void save_model(const std::string& path, GenreModel& model, const std::string& extra_json = "{}",
                const std::string& rng_state = "");

struct LoadedModel {
  std::unique_ptr<GenreModel> model;
  std::string extra_json;
  std::string rng_state;
  std::vector<std::string> warnings;
};

// The configuration stored in the file wins over `expected`; any difference
// is reported in `warnings`.
LoadedModel load_model(const std::string& path, const ModelConfig* expected = nullptr);
LoadedModel model_from_checkpoint(const CheckpointFile& ckpt, const ModelConfig* expected = nullptr);

}  // namespace gafx
