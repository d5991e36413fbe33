// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/metrics.hpp"

#include <algorithm>

#include "gafx/error.hpp"
#include "json.hpp"

namespace gafx {

using nlohmann::json;

void ConfusionMatrix::add(int label, int predicted) {
  if (label < 0 || predicted < 0 || static_cast<std::size_t>(label) >= classes ||
      static_cast<std::size_t>(predicted) >= classes) {
    throw ContractError("confusion matrix: class index out of range");
  }
  ++counts[static_cast<std::size_t>(label) * classes + static_cast<std::size_t>(predicted)];
}

std::size_t ConfusionMatrix::row_sum(std::size_t label) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < classes; ++j) s += at(label, j);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t c : counts) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < classes; ++i) s += at(i, i);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

double Metrics::best_train_accuracy() const {
  double best = 0.0;
  for (const auto& e : epochs) best = std::max(best, e.train_accuracy);
  return best;
}

std::string epoch_json(const EpochMetrics& m) {
  return json{{"type", "epoch"},
              {"epoch", m.epoch},
              {"steps", m.steps},
              {"loss", m.loss},
              {"train_accuracy", m.train_accuracy},
              {"lr", m.lr}}
      .dump();
}

std::string summary_json(const Metrics& m, const std::vector<std::string>& genres) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.confusion.classes; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.confusion.classes; ++j) row.push_back(m.confusion.at(i, j));
    rows.push_back(row);
  }
  return json{{"type", "summary"},
              {"epochs", m.epochs.size()},
              {"final_loss", m.epochs.empty() ? 0.0 : m.epochs.back().loss},
              {"best_train_accuracy", m.best_train_accuracy()},
              {"eval_accuracy", m.eval_accuracy},
              {"eval_clips", m.eval_clips},
              {"genres", genres},
              {"confusion", rows}}
      .dump();
}

MetricsLog::MetricsLog(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw IngestionError("cannot write metrics " + path);
}

void MetricsLog::write_line(const std::string& json_object) {
  if (!out_.is_open()) return;
  out_ << json_object << '\n';
  out_.flush();
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm, const std::vector<std::string>& genres) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path);
  auto name = [&](std::size_t i) { return i < genres.size() ? genres[i] : std::to_string(i); };
  out << "label\\predicted";
  for (std::size_t j = 0; j < cm.classes; ++j) out << ',' << name(j);
  out << '\n';
  for (std::size_t i = 0; i < cm.classes; ++i) {
    out << name(i);
    for (std::size_t j = 0; j < cm.classes; ++j) out << ',' << cm.at(i, j);
    out << '\n';
  }
}

}  // namespace gafx
