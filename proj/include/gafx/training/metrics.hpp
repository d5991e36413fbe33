// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace gafx {

struct ConfusionMatrix {
  explicit ConfusionMatrix(std::size_t classes = 10) : classes(classes), counts(classes * classes, 0) {}

  void add(int label, int predicted);
  std::size_t at(std::size_t label, std::size_t predicted) const { return counts[label * classes + predicted]; }
  std::size_t row_sum(std::size_t label) const;
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;

  std::size_t classes;
  std::vector<std::size_t> counts;  // [label][predicted]
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // cumulative optimizer steps
  double loss = 0.0;      // mean over the epoch's clips
  double train_accuracy = 0.0;
  double lr = 0.0;        // rate of the epoch's last step
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  ConfusionMatrix confusion;
  double eval_accuracy = 0.0;
  std::size_t eval_clips = 0;
  double wall_seconds = 0.0;  // kept out of the JSONL so runs compare byte-for-byte

  double best_train_accuracy() const;
};

std::string epoch_json(const EpochMetrics& m);
std::string summary_json(const Metrics& m, const std::vector<std::string>& genres);

// JSON lines, flushed after every record.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::string& path);
  bool is_open() const { return out_.is_open(); }
  void write_line(const std::string& json_object);

 private:
  std::ofstream out_;
};

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm, const std::vector<std::string>& genres);

}  // namespace gafx
