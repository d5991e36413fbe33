// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/model.hpp"

#include <algorithm>
#include <cmath>

#include "gafx/dsp/mel.hpp"
#include "gafx/dsp/resample.hpp"
#include "gafx/error.hpp"
#include "json.hpp"

namespace gafx {

using nlohmann::json;

AstConfig ModelConfig::ast() const {
  AstConfig a = ast_preset(classifier, time_steps());
  if (classifier_depth) a.depth = classifier_depth;
  a.num_classes = num_classes;
  return a;
}

void ModelConfig::validate() const {
  if (input_samples == 0) throw ConfigError("model input_samples must be positive");
  if (num_classes < 2) throw ConfigError("model needs at least two classes");
  if (extractor.kind != ExtractorKind::none) extractor.validate();
  ast().validate();
}

std::string ModelConfig::to_json() const {
  json skip = json::array();
  for (bool s : extractor.u.skip) skip.push_back(s);
  return json{{"extractor", extractor_kind_name(extractor.kind)},
              {"width_scale", extractor.width_scale},
              {"skip", skip},
              {"classifier", classifier},
              {"classifier_depth", classifier_depth},
              {"num_classes", num_classes},
              {"input_samples", input_samples}}
      .dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    ModelConfig c;
    c.extractor.kind = parse_extractor_kind(j.at("extractor").get<std::string>());
    c.extractor.width_scale = j.at("width_scale").get<std::size_t>();
    const auto skip = j.at("skip").get<std::vector<bool>>();
    if (skip.size() != c.extractor.u.skip.size()) throw ConfigError("model config: skip needs 6 flags");
    std::copy(skip.begin(), skip.end(), c.extractor.u.skip.begin());
    c.classifier = j.at("classifier").get<std::string>();
    c.classifier_depth = j.at("classifier_depth").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.input_samples = j.at("input_samples").get<std::size_t>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  }
}

GenreModel::GenreModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.extractor.kind != ExtractorKind::none) extractor_ = make_extractor<float>(cfg_.extractor, rng);
  classifier_ = std::make_unique<AstClassifier<float>>(cfg_.ast(), rng);
}

AudioClip GenreModel::convert(const AudioClip& raw, bool allow_resample) const {
  raw.validate();
  AudioClip clip = raw;
  const int rate = cfg_.input_rate();
  if (clip.sample_rate != rate) {
    if (!allow_resample) {
      throw ConfigError(std::string(extractor_kind_name(cfg_.extractor.kind)) + " needs " + std::to_string(rate) +
                        " Hz input but the clip is " + std::to_string(clip.sample_rate) +
                        " Hz; enable resampling to convert it");
    }
    clip = resample(clip, rate);
  }
  if (cfg_.input_channels() == 2 && clip.num_channels() == 1) clip = to_stereo(clip);
  if (cfg_.input_channels() == 1 && clip.num_channels() != 1) clip = to_mono(clip);
  return clip;
}

Tensor<float> GenreModel::baseline_spectrogram(const AudioClip& prepared) const {
  return mel_spectrogram(prepared, MelProfile::baseline_22k).values;
}

Tensor<float> GenreModel::normalize_baseline(const Tensor<float>& log_mel) const {
  FeatureMap f;
  f.values = log_mel;
  f.source = FeatureSource::mel_baseline;
  return normalize_feature(f, norm).values;
}

Tensor<float> GenreModel::features(const AudioClip& prepared) {
  if (!extractor_) return normalize_baseline(baseline_spectrogram(prepared));
  return standardize(extractor_->forward_clip(prepared).feature);
}

int argmax(std::span<const float> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int GenreModel::predict(const AudioClip& prepared) {
  NoGradGuard ng;
  return argmax(logits(prepared).data());
}

void GenreModel::visit(const std::string& prefix, const nn::ParamVisitor<float>& fn) {
  if (extractor_) extractor_->visit(nn::join_name(prefix, "extractor"), fn);
  classifier_->visit(nn::join_name(prefix, "classifier"), fn);
}

void GenreModel::set_training(bool training) {
  if (extractor_) extractor_->set_training(training);
  classifier_->set_training(training);
}

std::size_t estimate_training_bytes(const ModelConfig& cfg) {
  cfg.validate();
  const auto& ex = cfg.extractor;
  double acts = 0.0;
  const double L = static_cast<double>(cfg.input_samples);
  if (ex.kind == ExtractorKind::gafx_r || ex.kind == ExtractorKind::gafx_a) {
    const double rows = std::ceil(L / static_cast<double>(ex.r.row_width));
    const auto w = gafxr_width_trace(ex);
    const double stem = static_cast<double>(ex.scaled(ex.r.stem_channels));
    acts += rows * stem * (3.0 * static_cast<double>(w[1]) + static_cast<double>(w[2]));
    for (std::size_t s = 0; s < 5; ++s) {
      const double c = static_cast<double>(s == 4 ? ex.r.stage_channels[4] : ex.scaled(ex.r.stage_channels[s]));
      acts += 2.0 * 9.0 * rows * c * static_cast<double>(w[s + 3]);
    }
    if (ex.kind == ExtractorKind::gafx_a) {
      const double D = static_cast<double>(kFeatureBins), M = D * static_cast<double>(ex.a.mlp_ratio);
      acts += static_cast<double>(ex.a.depth) *
              (rows * (12.0 * D + 2.0 * M) + 3.0 * static_cast<double>(ex.a.heads) * rows * rows);
    }
  } else if (ex.kind == ExtractorKind::gafx_u) {
    const auto lengths = gafxu_encoder_lengths(ex, cfg.input_samples);
    double frames = static_cast<double>(stft_frames(cfg.input_samples, ex.u.stft));
    double freq = static_cast<double>(ex.u.stft.bins_kept - 1);
    for (std::size_t i = 0; i < 6; ++i) {
      const double c = static_cast<double>(ex.scaled(ex.u.encoder_channels[i]));
      freq = i < 5 ? freq / 4.0 : 1.0;
      if (i == 5) frames = static_cast<double>(lengths[5]);
      acts += 2.0 * 3.0 * c * (static_cast<double>(lengths[i]) + freq * frames);
    }
    const double H = static_cast<double>(ex.scaled(ex.u.encoder_channels[5]));
    acts += static_cast<double>(ex.u.lstm_layers) * 2.0 * static_cast<double>(lengths[5]) * 12.0 * H;
    const double full_frames = static_cast<double>(stft_frames(cfg.input_samples, ex.u.stft));
    acts += 32.0 * L + 4.0 * 4.0 * full_frames * static_cast<double>(ex.u.stft.bins_kept - 1);
  }
  const auto a = cfg.ast();
  const double N = static_cast<double>(a.grid().count() + 1), D = static_cast<double>(a.embed_dim);
  acts += static_cast<double>(a.depth) *
          (N * D * (12.0 + 2.0 * static_cast<double>(a.mlp_ratio)) + 3.0 * static_cast<double>(a.heads) * N * N);

  const double params = static_cast<double>(count_parameters(a)) +
                        (ex.kind == ExtractorKind::none ? 0.0 : static_cast<double>(count_parameters(ex)));
  // Activations are held with their gradients; parameters carry grad, m and v.
  return static_cast<std::size_t>(4.0 * (2.0 * acts + 4.0 * params));
}

CheckpointFile model_checkpoint(GenreModel& model, const std::string& extra_json, const std::string& rng_state) {
  CheckpointFile ckpt;
  ckpt.config = json{{"type", "genre-model"},
                     {"model", json::parse(model.config().to_json())},
                     {"extra", json::parse(extra_json)}}
                    .dump();
  model.visit("", [&](const std::string& name, Tensor<float>& t, nn::ParamKind) {
    ckpt.tensors.push_back(store_tensor(name, t));
  });
  ckpt.norm = model.norm;
  ckpt.rng_state = rng_state;
  return ckpt;
}

void save_model(const std::string& path, GenreModel& model, const std::string& extra_json,
                const std::string& rng_state) {
  write_checkpoint(path, model_checkpoint(model, extra_json, rng_state));
}

LoadedModel model_from_checkpoint(const CheckpointFile& ckpt, const ModelConfig* expected) {
  json meta;
  try {
    meta = json::parse(ckpt.config);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!meta.contains("type") || meta.at("type") != "genre-model") {
    throw FormatError("checkpoint does not hold a genre model");
  }
  const ModelConfig cfg = ModelConfig::from_json(meta.at("model").dump());
  LoadedModel out;
  if (expected && !(*expected == cfg)) {
    out.warnings.push_back("checkpoint config overrides the requested config: file " + cfg.to_json() +
                           ", requested " + expected->to_json());
  }
  Rng rng(0);
  auto model = std::make_unique<GenreModel>(cfg, rng);
  std::size_t restored = 0;
  model->visit("", [&](const std::string& name, Tensor<float>& t, nn::ParamKind) {
    const auto* src = ckpt.find(name);
    if (!src) throw IntegrityError("checkpoint is missing tensor " + name);
    restore_tensor(*src, t);
    ++restored;
  });
  if (restored != ckpt.tensors.size()) {
    throw IntegrityError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                         std::to_string(restored));
  }
  model->norm = ckpt.norm;
  out.model = std::move(model);
  out.extra_json = meta.contains("extra") ? meta.at("extra").dump() : "{}";
  out.rng_state = ckpt.rng_state;
  return out;
}

LoadedModel load_model(const std::string& path, const ModelConfig* expected) {
  return model_from_checkpoint(read_checkpoint(path), expected);
}

}  // namespace gafx
