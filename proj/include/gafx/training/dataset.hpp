// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gafx/dsp/audio_clip.hpp"

namespace gafx {

const std::vector<std::string>& gtzan_genres();

enum class Split { train, eval };
const char* split_name(Split s);

struct DatasetEntry {
  std::string id;      // "<parent>" or "<parent>#<child>"
  std::string parent;  // file stem, e.g. "blues.00042"
  std::string path;
  int label = 0;
  int sample_rate = 0;
  std::size_t channels = 0;
  std::size_t samples = 0;  // whole file, per channel
  std::size_t offset = 0;   // clip window in samples
  std::size_t length = 0;
  Split split = Split::train;

  double duration() const { return sample_rate > 0 ? static_cast<double>(length) / sample_rate : 0.0; }
};

struct DatasetIndex {
  std::vector<std::string> genres;
  std::vector<DatasetEntry> entries;
  std::uint64_t seed = 0;
  bool augmented = false;

  std::size_t count(Split s) const;
  std::vector<std::size_t> per_class_count(Split s) const;
  std::vector<const DatasetEntry*> select(Split s) const;

  std::string to_json() const;
  static DatasetIndex from_json(const std::string& text);
  void save(const std::string& path) const;
  static DatasetIndex load(const std::string& path);
};

// Scans root/<genre>/*.wav for each genre (an empty list discovers the
// subdirectories) and splits 80/20 per genre under `seed`.
DatasetIndex build_index(const std::string& root, std::uint64_t seed,
                         const std::vector<std::string>& genres = gtzan_genres());

// Reassigns splits: per label, round(0.8 n) randomly chosen entries train.
void stratified_split(std::vector<DatasetEntry>& entries, std::size_t num_classes, std::uint64_t seed);

// Each train entry becomes three consecutive 10 s children; eval entries are
// kept whole.
DatasetIndex augment_split(const DatasetIndex& index);

// Parent ids that occur in both splits.
std::vector<std::string> split_overlap(const DatasetIndex& index);

// Decodes the entry's window; samples past the end of the file read as zero.
AudioClip load_entry(const DatasetEntry& entry);

// Writes root/<genre>/<genre>.NNNNN.wav tones, one frequency band per genre,
// plus uniform noise of the given amplitude, for smoke tests and demos.
void synthesize_tone_corpus(const std::string& root, const std::vector<std::string>& genres,
                            std::size_t clips_per_genre, double seconds, int sample_rate,
                            std::uint64_t seed, double noise = 0.01);

}  // namespace gafx
