// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// gafx: prepare manifests, train and evaluate genre models, pretrain
// extractors, dump features and run the gradient-check suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "gafx/dsp/wav.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/gradcheck.hpp"
#include "gafx/training/pretrain.hpp"
#include "gafx/training/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gafx::IngestionError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw gafx::IngestionError("cannot create " + dir + ": " + ec.message());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// prepare -------------------------------------------------------------------

struct PrepareArgs {
  std::string dataset_dir, out, genres;
  bool augment = false;
  std::uint64_t seed = 0;
};

int run_prepare(const PrepareArgs& a) {
  const auto genres = a.genres == "auto" ? std::vector<std::string>{}
                      : a.genres.empty() ? gafx::gtzan_genres()
                                         : split_list(a.genres);
  auto index = gafx::build_index(a.dataset_dir, a.seed, genres);
  if (a.augment) index = gafx::augment_split(index);
  if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) ensure_dir(parent.string());
  index.save(a.out);
  std::cout << "manifest " << a.out << ": " << index.count(gafx::Split::train) << " train, "
            << index.count(gafx::Split::eval) << " eval, " << index.genres.size() << " classes\n";
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string manifest, extractor, classifier, config, out, pretrained;
  std::size_t width_scale = 0, epochs = 0, depth = 0;
  std::int64_t seed = -1;
  bool freeze = false, no_resample = false;
};

int run_train(const TrainArgs& a) {
  gafx::TrainConfig cfg;
  if (!a.config.empty()) cfg = gafx::TrainConfig::from_json(read_text(a.config));
  if (!a.extractor.empty()) cfg.extractor = gafx::parse_extractor_kind(a.extractor);
  if (!a.classifier.empty()) cfg.classifier = a.classifier;
  if (a.width_scale) cfg.width_scale = a.width_scale;
  if (a.epochs) cfg.epochs = a.epochs;
  if (a.depth) cfg.classifier_depth = a.depth;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.freeze) cfg.joint_finetune = false;
  if (a.no_resample) cfg.resample = false;
  cfg.validate();
  if (!a.pretrained.empty() && cfg.extractor == gafx::ExtractorKind::none) {
    throw UsageError("--from-pretrained needs a learnable extractor");
  }

  const auto index = gafx::DatasetIndex::load(a.manifest);
  ensure_dir(a.out);
  const fs::path out(a.out);
  gafx::FitOptions opts;
  opts.metrics_path = (out / "metrics.jsonl").string();
  opts.pretrained_path = a.pretrained;
  opts.log = &std::cout;
  const auto result = gafx::fit(index, cfg, opts);
  if (result.divergence) {
    std::cerr << "gafx train: " << result.divergence->message() << '\n';
    return kRuntimeFailure;
  }
  const std::string extra = nlohmann::json{{"train", nlohmann::json::parse(cfg.to_json())},
                                           {"genres", index.genres}}
                                .dump();
  gafx::save_model((out / "model.ckpt").string(), *result.model, extra, result.rng_state);
  gafx::write_confusion_csv((out / "confusion.csv").string(), result.metrics.confusion, index.genres);
  std::cout << "eval accuracy " << result.metrics.eval_accuracy << " over " << result.metrics.eval_clips
            << " clips\n"
            << "wrote " << (out / "model.ckpt").string() << ", " << opts.metrics_path << ", "
            << (out / "confusion.csv").string() << '\n';
  return kOk;
}

// pretrain ------------------------------------------------------------------

struct PretrainArgs {
  std::string corpus, extractor = "gafx-r", out;
  std::size_t width_scale = 1, epochs = 10, batch = 4, max_clips = 0;
  double lr = 5e-4;
  std::uint64_t seed = 0;
};

int run_pretrain(const PretrainArgs& a) {
  gafx::PretrainConfig cfg;
  cfg.extractor = gafx::parse_extractor_kind(a.extractor);
  cfg.width_scale = a.width_scale;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.max_clips = a.max_clips;
  cfg.validate();
  const auto corpus = gafx::find_pretrain_corpus(a.corpus, cfg.clip_seconds);
  if (corpus.empty()) {
    throw gafx::IngestionError("no WAV of at least " + std::to_string(cfg.clip_seconds) + " s under " + a.corpus);
  }
  gafx::FitOptions opts;
  opts.log = &std::cout;
  auto result = gafx::pretrain_fit(corpus, cfg, opts);
  if (result.divergence) {
    std::cerr << "gafx pretrain: " << result.divergence->message() << '\n';
    return kRuntimeFailure;
  }
  if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) ensure_dir(parent.string());
  gafx::save_pretrained(a.out, result, cfg);
  std::cout << "wrote " << a.out << '\n';
  return kOk;
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string ckpt, manifest, out, split = "eval";
};

int run_evaluate(const EvaluateArgs& a) {
  const auto split = a.split == "train" ? gafx::Split::train : gafx::Split::eval;
  auto loaded = gafx::load_model(a.ckpt);
  const auto index = gafx::DatasetIndex::load(a.manifest);
  if (index.genres.size() != loaded.model->config().num_classes) {
    throw gafx::ConfigError("manifest has " + std::to_string(index.genres.size()) + " classes, checkpoint has " +
                            std::to_string(loaded.model->config().num_classes));
  }
  const auto m = gafx::evaluate(*loaded.model, index, split);
  std::cout << "accuracy " << m.eval_accuracy << " (" << m.confusion.trace() << "/" << m.eval_clips << ")\n";
  if (!a.out.empty()) {
    if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) ensure_dir(parent.string());
    gafx::write_confusion_csv(a.out, m.confusion, index.genres);
    std::cout << "wrote " << a.out << '\n';
  }
  return kOk;
}

// extract -------------------------------------------------------------------

struct ExtractArgs {
  std::string ckpt, input, out;
};

int run_extract(const ExtractArgs& a) {
  auto loaded = gafx::load_model(a.ckpt);
  auto& model = *loaded.model;
  model.set_training(false);
  const auto clip = model.convert(gafx::load_wav(a.input));
  gafx::NoGradGuard no_grad;
  gafx::FeatureMap feature;
  if (model.has_extractor()) {
    auto out = model.extractor().forward_clip(clip);
    feature.values = out.feature;
    feature.source = out.source;
  } else {
    feature.values = model.baseline_spectrogram(clip);
    feature.source = gafx::FeatureSource::mel_baseline;
  }
  if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) ensure_dir(parent.string());
  gafx::write_feature_dump(a.out, feature);
  std::cout << "wrote " << a.out << ": T=" << feature.time_steps() << " F=" << feature.freq_bins() << '\n';
  return kOk;
}

// gradcheck -----------------------------------------------------------------

struct GradcheckArgs {
  std::string module = "tensor-core", dtype = "both";
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
  std::vector<gafx::DType> dtypes;
  if (a.dtype != "f32") dtypes.push_back(gafx::DType::f64);
  if (a.dtype != "f64") dtypes.push_back(gafx::DType::f32);
  bool ok = true;
  for (auto dt : dtypes) {
    const auto report = gafx::run_tensor_core_gradcheck(a.seed, dt);
    std::cout << report.summary();
    ok = ok && report.passed();
  }
  return ok ? kOk : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAFX music genre classification toolkit"};
  app.require_subcommand(1);
  app.footer("Environment: GAFX_THREADS caps worker threads; GAFX_MEMORY_BUDGET_MB sets the training budget.\n"
             "Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Index a genre-per-directory dataset and split it 80/20");
  p->add_option("--dataset-dir", prep.dataset_dir, "Root holding one directory of WAVs per genre")
      ->required()
      ->check(CLI::ExistingDirectory);
  p->add_option("--out", prep.out, "Manifest path (JSON)")->required();
  p->add_flag("--augment", prep.augment, "Cut every train clip into three 10 s children");
  p->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  p->add_option("--genres", prep.genres,
                "Comma-separated genre directories; empty uses the ten GTZAN genres, 'auto' lists the root");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a genre model on a manifest");
  t->add_option("--manifest", tr.manifest, "Manifest from 'prepare'")->required()->check(CLI::ExistingFile);
  t->add_option("--extractor", tr.extractor, "none, gafx-u, gafx-r or gafx-a")
      ->check(CLI::IsMember({"none", "gafx-u", "gafx-r", "gafx-a"}));
  t->add_option("--classifier", tr.classifier, "Patch transformer preset")
      ->check(CLI::IsMember({"deit-tiny", "deit-small"}));
  t->add_option("--width-scale", tr.width_scale, "Divide extractor widths by this factor")
      ->check(CLI::PositiveNumber);
  t->add_option("--config", tr.config, "Training config JSON; flags override it")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory for model.ckpt, metrics.jsonl and confusion.csv")->required();
  t->add_option("--from-pretrained", tr.pretrained, "Extractor weights from 'pretrain'")->check(CLI::ExistingFile);
  t->add_option("--epochs", tr.epochs, "Override the epoch count")->check(CLI::PositiveNumber);
  t->add_option("--depth", tr.depth, "Override the classifier depth")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Override the seed")->check(CLI::NonNegativeNumber);
  t->add_flag("--freeze-extractor", tr.freeze, "Train the classifier only");
  t->add_flag("--no-resample", tr.no_resample, "Reject clips whose rate differs from the extractor's");

  PretrainArgs pt;
  auto* q = app.add_subcommand("pretrain", "Pretrain an extractor to regress log-mel spectrograms");
  q->add_option("--corpus", pt.corpus, "Directory searched recursively for WAVs of at least 10 s")
      ->required()
      ->check(CLI::ExistingDirectory);
  q->add_option("--extractor", pt.extractor, "gafx-u, gafx-r or gafx-a")
      ->check(CLI::IsMember({"gafx-u", "gafx-r", "gafx-a"}))
      ->capture_default_str();
  q->add_option("--width-scale", pt.width_scale, "Divide extractor widths by this factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  q->add_option("--epochs", pt.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  q->add_option("--batch-size", pt.batch, "Clips per step")->check(CLI::PositiveNumber)->capture_default_str();
  q->add_option("--lr", pt.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  q->add_option("--max-clips", pt.max_clips, "Use at most this many clips (0 for all)")->capture_default_str();
  q->add_option("--seed", pt.seed, "Seed")->capture_default_str();
  q->add_option("--out", pt.out, "Checkpoint path")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on a manifest split");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint from 'train'")->required()->check(CLI::ExistingFile);
  e->add_option("--manifest", ev.manifest, "Manifest from 'prepare'")->required()->check(CLI::ExistingFile);
  e->add_option("--split", ev.split, "eval or train")->check(CLI::IsMember({"eval", "train"}))->capture_default_str();
  e->add_option("--out", ev.out, "Confusion matrix CSV path");

  ExtractArgs ex;
  auto* x = app.add_subcommand("extract", "Dump the (T, 128) feature map of one WAV");
  x->add_option("--ckpt", ex.ckpt, "Checkpoint from 'train'")->required()->check(CLI::ExistingFile);
  x->add_option("--input", ex.input, "WAV file")->required()->check(CLI::ExistingFile);
  x->add_option("--out", ex.out, "Feature dump path (GAFXFEAT)")->required();

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  g->add_option("--module", gc.module, "Suite to run")->check(CLI::IsMember({"tensor-core"}))->capture_default_str();
  g->add_option("--seed", gc.seed, "Seed for shapes and values")->capture_default_str();
  g->add_option("--dtype", gc.dtype, "f32, f64 or both")->check(CLI::IsMember({"f32", "f64", "both"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*p) return run_prepare(prep);
    if (*t) return run_train(tr);
    if (*q) return run_pretrain(pt);
    if (*e) return run_evaluate(ev);
    if (*x) return run_extract(ex);
    if (*g) return run_gradcheck(gc);
  } catch (const UsageError& err) {
    std::cerr << "gafx: " << err.what() << '\n';
    return kUsage;
  } catch (const gafx::ConfigError& err) {
    std::cerr << "gafx: " << err.what() << '\n';
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "gafx: " << err.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}
