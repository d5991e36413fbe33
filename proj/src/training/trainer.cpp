// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "gafx/dsp/resample.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/adam.hpp"
#include "json.hpp"

namespace gafx {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultBudgetMb = 3072;
// Above this many bytes of converted audio, clips are decoded per batch.
constexpr std::size_t kCacheLimit = std::size_t{1} << 30;

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0') throw ConfigError(std::string(name) + "='" + v + "' is not a number");
  return static_cast<std::size_t>(n);
}

void log_line(const FitOptions& o, const std::string& s) {
  if (o.log) *o.log << s << std::endl;
}

bool all_finite(GenreModel& model) {
  bool ok = true;
  model.visit("", [&](const std::string&, Tensor<float>& t, nn::ParamKind) {
    for (float v : t.data()) ok = ok && std::isfinite(v);
  });
  return ok;
}

void load_pretrained(GenreModel& model, const std::string& path) {
  const auto ckpt = read_checkpoint(path);
  const auto meta = json::parse(ckpt.config);
  if (meta.value("type", "") != "pretrain") throw FormatError(path + " is not a pretraining checkpoint");
  if (!model.has_extractor()) throw ConfigError("--from-pretrained needs a learnable extractor");
  const auto& ex = model.config().extractor;
  const std::string kind = meta.at("extractor").get<std::string>();
  if (kind != extractor_kind_name(ex.kind) || meta.at("width_scale").get<std::size_t>() != ex.width_scale) {
    throw ConfigError("pretrained extractor " + kind + " x" + std::to_string(meta.at("width_scale").get<std::size_t>()) +
                      " does not match " + extractor_kind_name(ex.kind) + " x" + std::to_string(ex.width_scale));
  }
  model.extractor().visit("extractor", [&](const std::string& name, Tensor<float>& t, nn::ParamKind) {
    const auto* src = ckpt.find(name);
    if (!src) throw IntegrityError("pretrained checkpoint is missing " + name);
    restore_tensor(*src, t);
  });
}

}  // namespace

std::string DivergenceReport::message() const {
  return "training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " + op +
         " produced a non-finite value (" + detail + ")";
}

std::size_t worker_threads(std::size_t requested) {
  if (requested) return requested;
  const std::size_t env = env_size("GAFX_THREADS", 0);
  if (env) return env;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t memory_budget_bytes(const TrainConfig& cfg) {
  const std::size_t mb = cfg.memory_budget_mb ? cfg.memory_budget_mb : env_size("GAFX_MEMORY_BUDGET_MB", kDefaultBudgetMb);
  return mb << 20;
}

ModelConfig model_config_for(const DatasetIndex& index, const TrainConfig& cfg) {
  const auto train = index.select(Split::train);
  if (train.empty()) throw ConfigError("manifest has no train entries");
  std::vector<double> durations;
  for (const auto* e : train) durations.push_back(e->duration());
  std::nth_element(durations.begin(), durations.begin() + static_cast<std::ptrdiff_t>(durations.size() / 2),
                   durations.end());
  const double seconds = std::round(durations[durations.size() / 2] * 10.0) / 10.0;
  if (seconds <= 0.0) throw ConfigError("train clips are shorter than 0.05 s");

  ModelConfig m;
  m.extractor.kind = cfg.extractor;
  m.extractor.width_scale = cfg.width_scale;
  m.classifier = cfg.classifier;
  m.classifier_depth = cfg.classifier_depth;
  m.num_classes = index.genres.size();
  m.input_samples = static_cast<std::size_t>(std::llround(seconds * m.input_rate()));
  if (!cfg.resample) {
    for (const auto& e : index.entries) {
      if (e.sample_rate != m.input_rate()) {
        throw ConfigError(std::string(extractor_kind_name(cfg.extractor)) + " needs " +
                          std::to_string(m.input_rate()) + " Hz clips but " + e.id + " is " +
                          std::to_string(e.sample_rate) + " Hz; resampling to " + std::to_string(m.input_rate()) +
                          " Hz is required (enable resampling)");
      }
    }
  }
  m.validate();
  return m;
}

std::vector<AudioClip> load_converted(const GenreModel& model, const std::vector<const DatasetEntry*>& entries,
                                      std::size_t threads, bool allow_resample) {
  std::vector<AudioClip> out(entries.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        out[i] = model.convert(load_entry(*entries[i]), allow_resample);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(1, threads), std::max<std::size_t>(1, entries.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<float> clip_logits(GenreModel& model, const AudioClip& converted) {
  const std::size_t L = model.config().input_samples;
  const std::size_t windows = std::max<std::size_t>(1, (converted.length() + L / 2) / L);
  std::vector<double> acc(model.config().num_classes, 0.0);
  NoGradGuard ng;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t start = std::min(w * L, converted.length());
    const std::size_t avail = std::min(L, converted.length() - start);
    const auto clip = avail ? fit_length(slice_clip(converted, start, avail), L) : fit_length(converted, L);
    const auto z = model.logits(clip);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += z[k];
  }
  std::vector<float> out(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / static_cast<double>(windows));
  return out;
}

FitResult fit(const DatasetIndex& index, const TrainConfig& cfg, const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const ModelConfig mcfg = model_config_for(index, cfg);
  const std::size_t need = estimate_training_bytes(mcfg);
  const std::size_t budget = memory_budget_bytes(cfg);
  if (need > budget) {
    throw BudgetError("estimated training working set " + std::to_string(need >> 20) + " MiB exceeds the " +
                      std::to_string(budget >> 20) + " MiB budget; raise --width-scale or GAFX_MEMORY_BUDGET_MB");
  }
  const std::size_t threads = worker_threads(options.threads);

  FitResult result;
  Rng rng(cfg.seed);
  result.model = std::make_unique<GenreModel>(mcfg, rng);
  GenreModel& model = *result.model;
  if (!options.pretrained_path.empty()) load_pretrained(model, options.pretrained_path);

  const auto train = index.select(Split::train);
  std::vector<int> labels;
  for (const auto* e : train) labels.push_back(e->label);

  const std::size_t clip_bytes = mcfg.input_samples * mcfg.input_channels() * sizeof(float);
  const bool cache = clip_bytes * train.size() <= kCacheLimit;
  std::vector<AudioClip> clips;
  std::vector<Tensor<float>> baseline;  // normalized log-mel per train clip
  if (cache) {
    clips = load_converted(model, train, threads, cfg.resample);
    for (auto& c : clips) c = fit_length(c, mcfg.input_samples);
  }
  if (!model.has_extractor()) {
    // Corpus statistics from equal-sized maps: pooled mean and variance.
    double mean = 0.0, sq = 0.0;
    std::vector<Tensor<float>> maps;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const AudioClip clip = cache ? clips[i] : model.prepare(load_entry(*train[i]), cfg.resample);
      maps.push_back(model.baseline_spectrogram(clip));
      const auto s = feature_stats(maps.back());
      mean += s.mean;
      sq += s.std * s.std + s.mean * s.mean;
    }
    mean /= static_cast<double>(train.size());
    model.norm = {mean, std::sqrt(std::max(0.0, sq / static_cast<double>(train.size()) - mean * mean))};
    for (const auto& m : maps) baseline.push_back(model.normalize_baseline(m));
    clips.clear();
  }

  if (!cfg.joint_finetune && model.has_extractor()) nn::set_requires_grad(model.extractor(), false);
  std::vector<Tensor<float>> params;
  model.visit("", [&](const std::string&, Tensor<float>& t, nn::ParamKind kind) {
    if (kind == nn::ParamKind::parameter && t.requires_grad()) params.push_back(t);
  });
  AdamState<float> adam;

  MetricsLog log;
  if (!options.metrics_path.empty()) log = MetricsLog(options.metrics_path);
  log.write_line(json{{"type", "config"},
                      {"train", json::parse(cfg.to_json())},
                      {"model", json::parse(mcfg.to_json())},
                      {"train_clips", train.size()},
                      {"parameters", nn::parameter_count(model)}}
                     .dump());

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t step = 0;
  model.set_training(true);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    double lr = 0.0;
    try {
      for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
        ++step;
        lr = lr_at(step, epoch, cfg);
        const std::size_t end = std::min(order.size(), b + cfg.batch_size);
        std::vector<AudioClip> batch_clips;
        if (model.has_extractor() && !cache) {
          std::vector<const DatasetEntry*> batch;
          for (std::size_t k = b; k < end; ++k) batch.push_back(train[order[k]]);
          batch_clips = load_converted(model, batch, threads, cfg.resample);
          for (auto& c : batch_clips) c = fit_length(c, mcfg.input_samples);
        }
        if (cfg.nan_inject_step == step && !params.empty()) {
          params.front().mutable_data()[0] = std::numeric_limits<float>::quiet_NaN();
        }
        nn::zero_grads(model);
        const float scale = 1.0f / static_cast<float>(end - b);
        for (std::size_t k = b; k < end; ++k) {
          const std::size_t i = order[k];
          Tensor<float> f;
          if (!model.has_extractor()) {
            f = baseline[i];
          } else {
            f = model.features(cache ? clips[i] : batch_clips[k - b]);
          }
          const auto z = model.classifier().forward(f);
          const int label = labels[i];
          const auto loss = ops::softmax_cross_entropy(ops::reshape(z, {1, z.numel()}), std::span<const int>(&label, 1));
          if (!std::isfinite(loss.item())) throw NonFiniteError("softmax_cross_entropy", "loss");
          loss_sum += loss.item();
          correct += argmax(z.data()) == label;
          ops::scale(loss, scale).backward();
        }
        adam_step<float>(params, adam, lr);
        if (!all_finite(model)) throw NonFiniteError("adam_step", "parameter update");
        result.lr_trace.push_back(lr);
      }
    } catch (const NonFiniteError& e) {
      result.divergence = DivergenceReport{epoch, step, e.op(), e.what()};
      log.write_line(json{{"type", "divergence"}, {"epoch", epoch}, {"step", step}, {"op", e.op()}}.dump());
      log_line(options, result.divergence->message());
      break;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.steps = step;
    em.loss = loss_sum / static_cast<double>(train.size());
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    em.lr = lr;
    result.metrics.epochs.push_back(em);
    log.write_line(epoch_json(em));
    log_line(options, "epoch " + std::to_string(epoch) + " loss " + std::to_string(em.loss) + " train_acc " +
                          std::to_string(em.train_accuracy) + " lr " + std::to_string(lr));
    if (cfg.stop_at_train_accuracy > 0.0 && em.train_accuracy >= cfg.stop_at_train_accuracy) break;
  }
  model.set_training(false);

  if (!result.divergence && index.count(Split::eval) > 0) {
    const auto ev = evaluate(model, index, Split::eval, threads, cfg.resample);
    result.metrics.confusion = ev.confusion;
    result.metrics.eval_accuracy = ev.eval_accuracy;
    result.metrics.eval_clips = ev.eval_clips;
  } else {
    result.metrics.confusion = ConfusionMatrix(index.genres.size());
  }
  log.write_line(summary_json(result.metrics, index.genres));
  result.rng_state = rng.state();
  result.metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

Metrics evaluate(GenreModel& model, const DatasetIndex& index, Split split, std::size_t threads,
                 bool allow_resample) {
  const auto entries = index.select(split);
  if (entries.empty()) throw ConfigError(std::string("manifest has no ") + split_name(split) + " entries");
  if (index.genres.size() != model.config().num_classes) {
    throw ConfigError("manifest has " + std::to_string(index.genres.size()) + " genres, model predicts " +
                      std::to_string(model.config().num_classes));
  }
  Metrics m;
  m.confusion = ConfusionMatrix(index.genres.size());
  model.set_training(false);
  const std::size_t n = worker_threads(threads);
  // Decode in bounded chunks to cap memory on full-length corpora.
  const std::size_t chunk = 32;
  for (std::size_t b = 0; b < entries.size(); b += chunk) {
    const std::vector<const DatasetEntry*> part(entries.begin() + static_cast<std::ptrdiff_t>(b),
                                                entries.begin() + static_cast<std::ptrdiff_t>(std::min(entries.size(), b + chunk)));
    const auto clips = load_converted(model, part, n, allow_resample);
    for (std::size_t i = 0; i < part.size(); ++i) {
      m.confusion.add(part[i]->label, argmax(clip_logits(model, clips[i])));
    }
  }
  m.eval_accuracy = m.confusion.accuracy();
  m.eval_clips = m.confusion.total();
  return m;
}

}  // namespace gafx
