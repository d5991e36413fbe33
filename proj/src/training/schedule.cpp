// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/schedule.hpp"

#include <algorithm>
#include <set>

#include "gafx/error.hpp"
#include "json.hpp"

namespace gafx {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be non-negative");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("decay_factor must be in (0, 1]");
  for (std::size_t i = 0; i < decay_epochs.size(); ++i) {
    if (i > 0 && decay_epochs[i] <= decay_epochs[i - 1]) {
      throw ConfigError("decay_epochs must be strictly increasing");
    }
    if (decay_epochs[i] >= epochs) {
      throw ConfigError("decay epoch " + std::to_string(decay_epochs[i]) + " is not below epochs=" +
                        std::to_string(epochs));
    }
  }
  if (width_scale == 0) throw ConfigError("width_scale must be >= 1");
  if (classifier != "deit-tiny" && classifier != "deit-small") {
    throw ConfigError("unknown classifier '" + classifier + "' (expected deit-tiny or deit-small)");
  }
}

std::string TrainConfig::to_json() const {
  json j{{"batch_size", batch_size},
         {"base_lr", base_lr},
         {"epochs", epochs},
         {"warmup_steps", warmup_steps},
         {"decay_epochs", decay_epochs},
         {"decay_factor", decay_factor},
         {"seed", seed},
         {"extractor", extractor_kind_name(extractor)},
         {"width_scale", width_scale},
         {"classifier", classifier},
         {"classifier_depth", classifier_depth},
         {"joint_finetune", joint_finetune},
         {"resample", resample},
         {"memory_budget_mb", memory_budget_mb},
         {"stop_at_train_accuracy", stop_at_train_accuracy},
         {"nan_inject_step", nan_inject_step}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"batch_size", "base_lr", "epochs", "warmup_steps", "decay_epochs",
                                           "decay_factor", "seed", "extractor", "width_scale", "classifier",
                                           "classifier_depth", "joint_finetune", "resample", "memory_budget_mb",
                                           "stop_at_train_accuracy", "nan_inject_step"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("batch_size", c.batch_size);
    get("base_lr", c.base_lr);
    get("epochs", c.epochs);
    get("warmup_steps", c.warmup_steps);
    get("decay_epochs", c.decay_epochs);
    get("decay_factor", c.decay_factor);
    get("seed", c.seed);
    if (j.contains("extractor")) c.extractor = parse_extractor_kind(j.at("extractor").get<std::string>());
    get("width_scale", c.width_scale);
    get("classifier", c.classifier);
    get("classifier_depth", c.classifier_depth);
    get("joint_finetune", c.joint_finetune);
    get("resample", c.resample);
    get("memory_budget_mb", c.memory_budget_mb);
    get("stop_at_train_accuracy", c.stop_at_train_accuracy);
    get("nan_inject_step", c.nan_inject_step);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

double lr_at(std::size_t step, std::size_t epoch, const TrainConfig& cfg) {
  double lr = cfg.base_lr;
  for (std::size_t e : cfg.decay_epochs) {
    if (e <= epoch) lr *= cfg.decay_factor;
  }
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    lr *= static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  return lr;
}

std::size_t steps_per_epoch(std::size_t train_clips, std::size_t batch_size) {
  return batch_size == 0 ? 0 : (train_clips + batch_size - 1) / batch_size;
}

}  // namespace gafx
