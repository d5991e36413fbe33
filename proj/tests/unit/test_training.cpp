// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gafx/dsp/wav.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/adam.hpp"
#include "gafx/tensor/gradcheck.hpp"
#include "gafx/training/pretrain.hpp"
#include "gafx/training/trainer.hpp"

namespace fs = std::filesystem;
using gafx::DatasetEntry;
using gafx::DatasetIndex;
using gafx::Rng;
using gafx::Split;
using gafx::Tensor;
using gafx::TrainConfig;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gafx_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// 10 genres x n entries, in memory.
std::vector<DatasetEntry> synthetic_entries(std::size_t per_genre) {
  std::vector<DatasetEntry> out;
  for (int g = 0; g < 10; ++g) {
    for (std::size_t k = 0; k < per_genre; ++k) {
      DatasetEntry e;
      e.parent = gafx::gtzan_genres()[static_cast<std::size_t>(g)] + "." + std::to_string(k);
      e.id = e.parent;
      e.path = e.parent + ".wav";
      e.label = g;
      e.sample_rate = 22050;
      e.channels = 1;
      e.samples = 661500;
      e.length = 661500;
      out.push_back(e);
    }
  }
  return out;
}

DatasetIndex gtzan_like(std::uint64_t seed) {
  DatasetIndex idx;
  idx.genres = gafx::gtzan_genres();
  idx.entries = synthetic_entries(100);
  idx.seed = seed;
  gafx::stratified_split(idx.entries, 10, seed);
  return idx;
}

// Three tone classes, three clips each, 0.25 s at 22050 Hz.
const fs::path& tiny_corpus() {
  static const fs::path dir = [] {
    auto d = scratch("tiny_corpus");
    gafx::synthesize_tone_corpus(d.string(), {"low", "mid", "high"}, 3, 0.25, 22050, 5);
    return d;
  }();
  return dir;
}

TrainConfig tiny_train_config(gafx::ExtractorKind kind) {
  TrainConfig c;
  c.extractor = kind;
  c.width_scale = 16;
  c.classifier_depth = 1;
  c.epochs = 3;
  c.batch_size = 2;
  c.base_lr = 1e-3;
  c.warmup_steps = 4;
  c.decay_epochs = {2};
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule examples") {
  TrainConfig c;
  CHECK(gafx::lr_at(400, 0, c) == 2.5e-5);
  CHECK(gafx::lr_at(800, 0, c) == 5e-5);
  CHECK(gafx::lr_at(801, 3, c) == 5e-5);
  CHECK(gafx::lr_at(10000, 12, c) == 2.5e-5);
  CHECK(gafx::lr_at(10000, 11, c) == 5e-5);
  CHECK(gafx::lr_at(20000, 65, c) == 3.125e-6);
  CHECK(gafx::lr_at(1, 0, c) == doctest::Approx(5e-5 / 800).epsilon(1e-12));
}

TEST_CASE("schedule is non-decreasing through warm-up and non-increasing after") {
  TrainConfig c;
  const std::size_t per_epoch = gafx::steps_per_epoch(800, c.batch_size);
  CHECK(per_epoch == 200);
  double prev = 0.0;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    for (std::size_t k = 0; k < per_epoch; ++k) {
      ++step;
      const double lr = gafx::lr_at(step, epoch, c);
      if (step <= c.warmup_steps) {
        CHECK(lr >= prev);
      } else {
        CHECK(lr <= prev);
      }
      prev = lr;
    }
  }
  CHECK(prev == 5e-5 / 16);
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.decay_epochs = {12, 12};
  CHECK_THROWS_AS(c.validate(), gafx::ConfigError);
  c.decay_epochs = {12, 80};
  CHECK_THROWS_AS(c.validate(), gafx::ConfigError);
  c.decay_epochs = {3, 5};
  c.epochs = 6;
  c.extractor = gafx::ExtractorKind::gafx_a;
  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"learning_rate": 1})"), gafx::ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"extractor": "gafx-z"})"), gafx::ConfigError);
}

TEST_CASE("stratified split counts and determinism") {
  const auto a = gtzan_like(1);
  CHECK(a.count(Split::train) == 800);
  CHECK(a.count(Split::eval) == 200);
  for (std::size_t n : a.per_class_count(Split::train)) CHECK(n == 80);
  for (std::size_t n : a.per_class_count(Split::eval)) CHECK(n == 20);
  const auto same = gtzan_like(1);
  const auto other = gtzan_like(2);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    identical = identical && a.entries[i].split == same.entries[i].split;
    differs = differs || a.entries[i].split != other.entries[i].split;
  }
  CHECK(identical);
  CHECK(differs);
  CHECK(other.per_class_count(Split::train) == a.per_class_count(Split::train));
}

TEST_CASE("augmentation triples the train split without leakage") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto aug = gafx::augment_split(gtzan_like(seed));
    CHECK(aug.count(Split::train) == 2400);
    CHECK(aug.count(Split::eval) == 200);
    CHECK(gafx::split_overlap(aug).empty());
    for (std::size_t n : aug.per_class_count(Split::train)) CHECK(n == 240);
  }
  const auto aug = gafx::augment_split(gtzan_like(3));
  for (const auto& e : aug.entries) {
    if (e.split == Split::train) {
      CHECK(e.length == 220500);
      CHECK(e.duration() == 10.0);
      CHECK(e.offset % 220500 == 0);
    } else {
      CHECK(e.length == 661500);
    }
  }
  CHECK_THROWS_AS(gafx::augment_split(aug), gafx::ContractError);
}

TEST_CASE("augmented children reassemble the parent bit-exactly") {
  const auto dir = scratch("children");
  Rng rng(4);
  std::vector<float> x(661500);
  for (auto& v : x) v = static_cast<float>(std::round(rng.uniform(-20000, 20000)) / 32768.0);
  const auto path = (dir / "blues.00000.wav").string();
  gafx::save_wav(path, gafx::make_clip(x, 22050));
  const auto parent = gafx::load_wav(path);

  DatasetIndex idx;
  idx.genres = {"blues"};
  DatasetEntry e;
  e.parent = e.id = "blues.00000";
  e.path = path;
  e.sample_rate = 22050;
  e.channels = 1;
  e.samples = e.length = 661500;
  idx.entries.push_back(e);
  const auto aug = gafx::augment_split(idx);
  REQUIRE(aug.entries.size() == 3);
  std::vector<float> joined;
  std::vector<std::size_t> starts{0, 220500, 441000};
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(aug.entries[k].offset == starts[k]);
    const auto child = gafx::load_entry(aug.entries[k]);
    CHECK(child.length() == 220500);
    CHECK(child.duration() == 10.0);
    joined.insert(joined.end(), child.channels[0].begin(), child.channels[0].end());
  }
  CHECK(joined == parent.channels[0]);
}

TEST_CASE("build_index on a directory tree") {
  SUBCASE("GTZAN layout") {
    const auto dir = scratch("gtzan");
    gafx::synthesize_tone_corpus(dir.string(), gafx::gtzan_genres(), 10, 0.05, 22050, 1);
    const auto idx = gafx::build_index(dir.string(), 7);
    CHECK(idx.entries.size() == 100);
    CHECK(idx.count(Split::train) == 80);
    for (std::size_t n : idx.per_class_count(Split::eval)) CHECK(n == 2);
    CHECK(idx.entries.front().parent == "blues.00000");
    const auto json = idx.to_json();
    CHECK(DatasetIndex::from_json(json).to_json() == json);
    CHECK(gafx::build_index(dir.string(), 7).to_json() == json);
  }
  SUBCASE("empty directory") {
    const auto dir = scratch("empty");
    CHECK_THROWS_AS(gafx::build_index(dir.string(), 0), gafx::IngestionError);
    CHECK_THROWS_AS(gafx::build_index(dir.string(), 0, {}), gafx::IngestionError);
  }
  SUBCASE("missing genres and unreadable files are listed") {
    const auto dir = scratch("broken");
    gafx::synthesize_tone_corpus(dir.string(), {"blues", "jazz"}, 2, 0.05, 22050, 1);
    try {
      gafx::build_index(dir.string(), 0);
      FAIL("expected an ingestion error");
    } catch (const gafx::IngestionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("classical") != std::string::npos);
      CHECK(msg.find("rock") != std::string::npos);
    }
    { std::ofstream(dir / "jazz" / "jazz.00009.wav") << "not a wav"; }
    try {
      gafx::build_index(dir.string(), 0, {"blues", "jazz"});
      FAIL("expected an ingestion error");
    } catch (const gafx::IngestionError& e) {
      CHECK(std::string(e.what()).find("jazz.00009.wav") != std::string::npos);
    }
  }
}

TEST_CASE("checkpoint container round trip and corruption") {
  gafx::CheckpointFile ck;
  ck.config = R"({"type":"test"})";
  Rng rng(1);
  ck.tensors.push_back(gafx::store_tensor("a", gafx::random_tensor<float>({3, 4}, rng)));
  ck.tensors.push_back(gafx::store_tensor("b", gafx::random_tensor<double>({5}, rng)));
  ck.norm = {0.25, 1.5};
  ck.rng_state = "state";
  const auto bytes = gafx::encode_checkpoint(ck);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "GAFXCKPT");
  const auto back = gafx::decode_checkpoint(bytes);
  CHECK(back.config == ck.config);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].values == ck.tensors[0].values);
  CHECK(back.tensors[1].values == ck.tensors[1].values);
  CHECK(back.tensors[1].dtype == gafx::DType::f64);
  CHECK(back.norm.std == 1.5);
  CHECK(back.rng_state == "state");
  CHECK(gafx::encode_checkpoint(back) == bytes);

  for (std::size_t cut = 8; cut < bytes.size(); cut += 7) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(gafx::decode_checkpoint(part), gafx::IntegrityError);
  }
  auto flipped = bytes;
  flipped[40] ^= 0x10;
  CHECK_THROWS_AS(gafx::decode_checkpoint(flipped), gafx::IntegrityError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(gafx::decode_checkpoint(magic), gafx::FormatError);
  auto version = bytes;
  version[8] = 9;
  CHECK_THROWS_AS(gafx::decode_checkpoint(version), gafx::FormatError);
}

TEST_CASE("model checkpoints reproduce forwards bit-identically") {
  gafx::ModelConfig mc;
  mc.extractor.kind = gafx::ExtractorKind::gafx_r;
  mc.extractor.width_scale = 16;
  mc.classifier_depth = 1;
  mc.num_classes = 3;
  mc.input_samples = 4000;
  Rng rng(2);
  gafx::GenreModel model(mc, rng);
  model.set_training(false);
  const auto clip = gafx::make_clip(std::vector<float>(4000, 0.0f), 22050);
  Rng xr(3);
  auto x = clip;
  for (auto& v : x.channels[0]) v = static_cast<float>(xr.uniform(-0.5, 0.5));
  std::vector<float> before;
  {
    gafx::NoGradGuard ng;
    const auto z = model.logits(x);
    before.assign(z.data().begin(), z.data().end());
  }
  const auto dir = scratch("model_ckpt");
  const auto path = (dir / "m.ckpt").string();
  gafx::save_model(path, model);
  auto loaded = gafx::load_model(path, &mc);
  CHECK(loaded.warnings.empty());
  loaded.model->set_training(false);
  gafx::NoGradGuard ng;
  const auto z = loaded.model->logits(x);
  CHECK(std::vector<float>(z.data().begin(), z.data().end()) == before);

  SUBCASE("file config overrides the caller with a warning") {
    auto other = mc;
    other.classifier_depth = 2;
    const auto l2 = gafx::load_model(path, &other);
    REQUIRE(l2.warnings.size() == 1);
    CHECK(l2.warnings[0].find("overrides") != std::string::npos);
    CHECK(l2.model->config().classifier_depth == 1);
  }
  SUBCASE("truncated file is rejected") {
    const auto bytes = slurp(path);
    const auto cut = (dir / "cut.ckpt").string();
    { std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2)); }
    CHECK_THROWS_AS(gafx::load_model(cut), gafx::IntegrityError);
  }
}

TEST_CASE("an Adam step with lr 0 leaves parameters bit-identical") {
  gafx::ModelConfig mc;
  mc.extractor.kind = gafx::ExtractorKind::gafx_a;
  mc.extractor.width_scale = 16;
  mc.classifier_depth = 1;
  mc.num_classes = 3;
  mc.input_samples = 2000;
  Rng rng(5);
  gafx::GenreModel model(mc, rng);
  auto clip = gafx::make_clip(std::vector<float>(2000), 22050);
  for (auto& v : clip.channels[0]) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  const int label = 1;
  const auto z = model.logits(clip);
  gafx::ops::softmax_cross_entropy(gafx::ops::reshape(z, {1, 3}), std::span<const int>(&label, 1)).backward();
  auto params = gafx::nn::parameters(model);
  std::vector<std::vector<float>> before;
  for (const auto& p : params) {
    CHECK(p.has_grad());
    before.emplace_back(p.data().begin(), p.data().end());
  }
  gafx::AdamState<float> st;
  gafx::adam_step<float>(params, st, 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(std::vector<float>(params[i].data().begin(), params[i].data().end()) == before[i]);
  }
}

TEST_CASE("confusion matrix identities") {
  gafx::ConfusionMatrix cm(10);
  for (int label = 0; label < 10; ++label) {
    for (int k = 0; k < 20; ++k) cm.add(label, 3);
  }
  CHECK(cm.accuracy() == 0.10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(cm.row_sum(i) == 20);

  Rng rng(6);
  gafx::ConfusionMatrix r(10);
  std::vector<std::size_t> per_class(10, 0);
  std::size_t hits = 0;
  for (int k = 0; k < 500; ++k) {
    const int label = static_cast<int>(rng.below(10)), pred = static_cast<int>(rng.below(10));
    r.add(label, pred);
    ++per_class[static_cast<std::size_t>(label)];
    hits += label == pred;
  }
  CHECK(r.total() == 500);
  CHECK(r.trace() == hits);
  CHECK(r.accuracy() == static_cast<double>(hits) / 500.0);
  for (std::size_t i = 0; i < 10; ++i) CHECK(r.row_sum(i) == per_class[i]);
  CHECK_THROWS_AS(r.add(10, 0), gafx::ContractError);
}

TEST_CASE("fit is deterministic and follows the schedule") {
  auto idx = gafx::build_index(tiny_corpus().string(), 1, {"low", "mid", "high"});
  const auto cfg = tiny_train_config(gafx::ExtractorKind::gafx_r);
  const auto dir = scratch("fit_det");
  gafx::FitOptions o1, o2;
  o1.metrics_path = (dir / "a.jsonl").string();
  o2.metrics_path = (dir / "b.jsonl").string();
  const auto r1 = gafx::fit(idx, cfg, o1);
  const auto r2 = gafx::fit(idx, cfg, o2);
  CHECK_FALSE(r1.divergence);
  REQUIRE(r1.metrics.epochs.size() == 3);
  CHECK(r1.metrics.epochs.back().loss == r2.metrics.epochs.back().loss);
  CHECK(slurp(o1.metrics_path) == slurp(o2.metrics_path));

  const std::size_t per_epoch = gafx::steps_per_epoch(idx.count(Split::train), cfg.batch_size);
  REQUIRE(r1.lr_trace.size() == 3 * per_epoch);
  for (std::size_t s = 0; s < r1.lr_trace.size(); ++s) {
    CHECK(r1.lr_trace[s] == gafx::lr_at(s + 1, s / per_epoch, cfg));
  }

  const auto& cm = r1.metrics.confusion;
  const auto counts = idx.per_class_count(Split::eval);
  for (std::size_t i = 0; i < 3; ++i) CHECK(cm.row_sum(i) == counts[i]);
  CHECK(r1.metrics.eval_accuracy == cm.accuracy());
  CHECK(r1.metrics.eval_accuracy >= 0.0);
  CHECK(r1.metrics.eval_accuracy <= 1.0);

  std::istringstream lines(slurp(o1.metrics_path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 1 + 3 + 1);
}

TEST_CASE("evaluate is unchanged by a checkpoint round trip") {
  auto idx = gafx::build_index(tiny_corpus().string(), 2, {"low", "mid", "high"});
  auto cfg = tiny_train_config(gafx::ExtractorKind::none);
  cfg.epochs = 2;
  cfg.decay_epochs = {};
  auto r = gafx::fit(idx, cfg);
  const auto before = gafx::evaluate(*r.model, idx);
  const auto dir = scratch("eval_rt");
  gafx::save_model((dir / "m.ckpt").string(), *r.model);
  auto loaded = gafx::load_model((dir / "m.ckpt").string());
  const auto after = gafx::evaluate(*loaded.model, idx);
  CHECK(after.confusion.counts == before.confusion.counts);
  CHECK(after.eval_accuracy == before.eval_accuracy);
  CHECK(loaded.model->norm.mean == r.model->norm.mean);

  DatasetIndex no_eval = idx;
  for (auto& e : no_eval.entries) e.split = Split::train;
  try {
    gafx::evaluate(*r.model, no_eval);
    FAIL("expected an error");
  } catch (const gafx::ConfigError& e) {
    CHECK(std::string(e.what()).find("no eval entries") != std::string::npos);
  }
}

TEST_CASE("pipeline guards") {
  auto idx = gafx::build_index(tiny_corpus().string(), 1, {"low", "mid", "high"});
  SUBCASE("GAFX-U without resampling on 22 kHz clips") {
    auto cfg = tiny_train_config(gafx::ExtractorKind::gafx_u);
    cfg.resample = false;
    try {
      gafx::fit(idx, cfg);
      FAIL("expected a config error");
    } catch (const gafx::ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("16000 Hz") != std::string::npos);
      CHECK(msg.find("resampl") != std::string::npos);
    }
  }
  SUBCASE("full-width GAFX-U on 30 s clips exceeds the desk budget") {
    DatasetIndex big = gtzan_like(0);
    auto cfg = tiny_train_config(gafx::ExtractorKind::gafx_u);
    cfg.width_scale = 1;
    cfg.classifier_depth = 0;
    CHECK_THROWS_AS(gafx::fit(big, cfg), gafx::BudgetError);
  }
  SUBCASE("NaN-seeded GAFX-A run ends with a divergence report") {
    auto cfg = tiny_train_config(gafx::ExtractorKind::gafx_a);
    cfg.nan_inject_step = 3;
    const auto r = gafx::fit(idx, cfg);
    REQUIRE(r.divergence.has_value());
    CHECK(r.divergence->step == 3);
    CHECK(r.divergence->epoch == 0);
    CHECK(r.divergence->message().find("step 3") != std::string::npos);
    CHECK(r.metrics.epochs.empty());
  }
  SUBCASE("frozen extractor keeps its weights") {
    auto cfg = tiny_train_config(gafx::ExtractorKind::gafx_r);
    cfg.joint_finetune = false;
    cfg.epochs = 1;
    cfg.decay_epochs = {};
    const auto r = gafx::fit(idx, cfg);
    Rng rng(cfg.seed);
    gafx::GenreModel fresh(r.model->config(), rng);
    const auto a = gafx::nn::parameters(r.model->extractor());
    const auto b = gafx::nn::parameters(fresh.extractor());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::vector<float>(a[i].data().begin(), a[i].data().end()) ==
            std::vector<float>(b[i].data().begin(), b[i].data().end()));
    }
  }
}

TEST_CASE("long clips are scored over averaged windows") {
  gafx::ModelConfig mc;
  mc.extractor.kind = gafx::ExtractorKind::none;
  mc.classifier_depth = 1;
  mc.num_classes = 3;
  mc.input_samples = 2205;
  Rng rng(8);
  gafx::GenreModel model(mc, rng);
  auto clip = gafx::make_clip(std::vector<float>(3 * 2205), 22050);
  for (auto& v : clip.channels[0]) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  std::vector<double> want(3, 0.0);
  {
    gafx::NoGradGuard ng;
    for (std::size_t w = 0; w < 3; ++w) {
      const auto z = model.logits(gafx::slice_clip(clip, w * 2205, 2205));
      for (std::size_t k = 0; k < 3; ++k) want[k] += z[k] / 3.0;
    }
  }
  const auto got = gafx::clip_logits(model, clip);
  for (std::size_t k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-6));
}

TEST_CASE("pretraining target and loss ordering") {
  for (int rate : {16000, 22050, 44100}) {
    const auto clip = gafx::make_clip(std::vector<float>(static_cast<std::size_t>(rate) * 10, 0.1f), rate);
    CHECK(gafx::pretrain_log_mel(clip).shape() == gafx::Shape{1024, 128});
  }
  Rng rng(9);
  std::vector<float> x(160000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.4 * std::sin(0.05 * i) + 0.05 * rng.uniform(-1, 1));
  const auto mel = gafx::pretrain_log_mel(gafx::make_clip(x, 16000));
  double lo = 1e30, hi = -1e30;
  for (float v : mel.data()) {
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  const auto target = gafx::minmax_normalize(mel, lo, hi);
  for (float v : target.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  std::vector<float> perfect(target.numel());
  for (std::size_t i = 0; i < perfect.size(); ++i) {
    const double t = std::clamp(static_cast<double>(target[i]), 1e-4, 1.0 - 1e-4);
    perfect[i] = static_cast<float>(std::log(t / (1.0 - t)));
  }
  const auto l_perfect = gafx::ops::bce_with_logits(Tensor<float>(target.shape(), perfect), target).item();
  const auto l_zero = gafx::ops::bce_with_logits(Tensor<float>::zeros(target.shape()), target).item();
  CHECK(l_perfect < l_zero);
}

TEST_CASE("time_resample interpolation") {
  std::vector<double> v{0, 1, 2, 3, 10, 20, 30, 40};
  const Tensor<double> x({4, 2}, v);
  const auto y = gafx::time_resample(x, 7);
  REQUIRE(y.shape() == gafx::Shape{7, 2});
  CHECK(y[0] == 0.0);
  CHECK(y[12] == 30.0);
  CHECK(y[13] == 40.0);
  // Output row i samples input row i/2.
  CHECK(y[2] == doctest::Approx(1.0));
  CHECK(y[7] == doctest::Approx(11.5));
  const auto one = gafx::time_resample(Tensor<double>({1, 2}, {4, 5}), 3);
  CHECK(one[4] == 4.0);
  CHECK(one[5] == 5.0);

  Rng rng(10);
  auto in = gafx::random_tensor<double>({5, 3}, rng);
  const auto res = gafx::check_gradients<double>(
      "time_resample", [&] { return gafx::time_resample(in, 9); }, {in},
      gafx::default_gradcheck_options(gafx::DType::f64, 1));
  CHECK(res.passed);
}
