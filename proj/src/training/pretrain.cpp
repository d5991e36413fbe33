// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "gafx/dsp/mel.hpp"
#include "gafx/dsp/resample.hpp"
#include "gafx/dsp/wav.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/adam.hpp"
#include "json.hpp"

namespace gafx {

namespace fs = std::filesystem;
using nlohmann::json;

void PretrainConfig::validate() const {
  if (extractor == ExtractorKind::none) throw ConfigError("pretraining needs a learnable extractor");
  if (width_scale == 0) throw ConfigError("width_scale must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("pretraining lr must be positive");
  if (batch_size == 0 || epochs == 0) throw ConfigError("batch_size and epochs must be positive");
  if (!(clip_seconds > 0.0)) throw ConfigError("clip_seconds must be positive");
}

std::string PretrainConfig::to_json() const {
  return json{{"extractor", extractor_kind_name(extractor)},
              {"width_scale", width_scale},
              {"lr", lr},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"seed", seed},
              {"clip_seconds", clip_seconds},
              {"max_clips", max_clips}}
      .dump();
}

template <typename T>
Tensor<T> time_resample(const Tensor<T>& x, std::size_t frames) {
  if (x.dim() != 2) throw DimensionError("time_resample expects [T, F], got " + shape_str(x.shape()));
  if (frames == 0) throw DimensionError("time_resample: zero frames");
  const std::size_t n = x.extent(0);
  std::vector<T> w(frames * n, T(0));
  for (std::size_t i = 0; i < frames; ++i) {
    if (n == 1) {
      w[i] = T(1);
      continue;
    }
    const double pos = frames == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(frames - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), n - 2);
    const double frac = pos - static_cast<double>(lo);
    w[i * n + lo] += static_cast<T>(1.0 - frac);
    w[i * n + lo + 1] += static_cast<T>(frac);
  }
  return ops::matmul(Tensor<T>({frames, n}, std::move(w)), x);
}

std::vector<std::string> find_pretrain_corpus(const std::string& dir, double min_seconds) {
  if (!fs::is_directory(dir)) throw IngestionError("pretraining corpus " + dir + " does not exist");
  std::vector<std::string> paths, skipped;
  for (const auto& f : fs::recursive_directory_iterator(dir)) {
    if (!f.is_regular_file() || f.path().extension() != ".wav") continue;
    const auto clip = load_wav(f.path().string());
    if (clip.duration() + 1e-9 >= min_seconds) {
      paths.push_back(f.path().string());
    } else {
      skipped.push_back(f.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw IngestionError("no .wav files of at least " + std::to_string(min_seconds) + " s under " + dir + " (" +
                         std::to_string(skipped.size()) + " shorter files skipped)");
  }
  return paths;
}

Tensor<float> pretrain_log_mel(const AudioClip& raw, double clip_seconds) {
  const int rate = mel_profile_spec(MelProfile::pretrain_16k).sample_rate;
  AudioClip clip = raw.sample_rate == rate ? raw : resample(raw, rate);
  clip = fit_length(to_mono(clip), static_cast<std::size_t>(std::llround(clip_seconds * rate)));
  return mel_spectrogram(clip, MelProfile::pretrain_16k).values;
}

Tensor<float> minmax_normalize(const Tensor<float>& x, double lo, double hi) {
  const double span = std::max(hi - lo, 1e-12);
  std::vector<float> y(x.numel());
  const auto d = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>(std::clamp((d[i] - lo) / span, 0.0, 1.0));
  return Tensor<float>(x.shape(), std::move(y));
}

PretrainModel::PretrainModel(const ExtractorConfig& cfg, Rng& rng) : cfg_(cfg) {
  extractor_ = make_extractor<float>(cfg_, rng);
  head = nn::Linear<float>(kFeatureBins, kFeatureBins, rng);
}

AudioClip PretrainModel::prepare(const AudioClip& raw) const {
  const int rate = required_sample_rate(cfg_.kind);
  AudioClip clip = raw.sample_rate == rate ? raw : resample(raw, rate);
  clip = required_channels(cfg_.kind) == 2 ? (clip.num_channels() == 1 ? to_stereo(clip) : clip) : to_mono(clip);
  return fit_length(clip, cfg_.input_samples);
}

Tensor<float> PretrainModel::logits(const AudioClip& prepared) {
  const auto f = standardize(extractor_->forward_clip(prepared).feature);
  return head.forward(time_resample(f, kPretrainFrames));
}

void PretrainModel::visit(const std::string& prefix, const nn::ParamVisitor<float>& fn) {
  extractor_->visit(nn::join_name(prefix, "extractor"), fn);
  head.visit(nn::join_name(prefix, "head"), fn);
}

PretrainResult pretrain_fit(const std::vector<std::string>& corpus_in, const PretrainConfig& cfg,
                            const FitOptions& options) {
  cfg.validate();
  std::vector<std::string> corpus = corpus_in;
  if (cfg.max_clips && corpus.size() > cfg.max_clips) corpus.resize(cfg.max_clips);
  if (corpus.empty()) throw IngestionError("pretraining corpus is empty");

  ExtractorConfig ecfg;
  ecfg.kind = cfg.extractor;
  ecfg.width_scale = cfg.width_scale;
  ecfg.input_samples = static_cast<std::size_t>(std::llround(cfg.clip_seconds * required_sample_rate(cfg.extractor)));
  ecfg.validate();

  PretrainResult result;
  Rng rng(cfg.seed);
  result.model = std::make_unique<PretrainModel>(ecfg, rng);
  PretrainModel& model = *result.model;

  std::vector<AudioClip> inputs;
  std::vector<Tensor<float>> targets;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& path : corpus) {
    const auto raw = load_wav(path);
    inputs.push_back(model.prepare(raw));
    targets.push_back(pretrain_log_mel(raw, cfg.clip_seconds));
    for (float v : targets.back().data()) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  for (auto& t : targets) t = minmax_normalize(t, lo, hi);
  result.target_min = lo;
  result.target_max = hi;

  std::vector<Tensor<float>> params = nn::parameters(model);
  AdamState<float> adam;
  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t step = 0;
  model.set_training(true);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    try {
      for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
        ++step;
        const std::size_t end = std::min(order.size(), b + cfg.batch_size);
        nn::zero_grads(model);
        for (std::size_t k = b; k < end; ++k) {
          const auto loss = ops::bce_with_logits(model.logits(inputs[order[k]]), targets[order[k]]);
          if (!std::isfinite(loss.item())) throw NonFiniteError("bce_with_logits", "loss");
          loss_sum += loss.item();
          ops::scale(loss, 1.0f / static_cast<float>(end - b)).backward();
        }
        adam_step<float>(params, adam, cfg.lr);
      }
    } catch (const NonFiniteError& e) {
      result.divergence = DivergenceReport{epoch, step, e.op(), e.what()};
      if (options.log) *options.log << result.divergence->message() << std::endl;
      break;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(inputs.size()));
    if (options.log) *options.log << "pretrain epoch " << epoch << " loss " << result.epoch_loss.back() << std::endl;
  }
  model.set_training(false);
  return result;
}

void save_pretrained(const std::string& path, PretrainResult& result, const PretrainConfig& cfg) {
  CheckpointFile ckpt;
  const auto& e = result.model->config();
  ckpt.config = json{{"type", "pretrain"},
                     {"extractor", extractor_kind_name(e.kind)},
                     {"width_scale", e.width_scale},
                     {"input_samples", e.input_samples},
                     {"target_min", result.target_min},
                     {"target_max", result.target_max},
                     {"config", json::parse(cfg.to_json())},
                     {"epoch_loss", result.epoch_loss}}
                    .dump();
  result.model->visit("", [&](const std::string& name, Tensor<float>& t, nn::ParamKind) {
    ckpt.tensors.push_back(store_tensor(name, t));
  });
  write_checkpoint(path, ckpt);
}

template Tensor<float> time_resample(const Tensor<float>&, std::size_t);
template Tensor<double> time_resample(const Tensor<double>&, std::size_t);

}  // namespace gafx
