// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "gafx/dsp/wav.hpp"
#include "gafx/error.hpp"
#include "gafx/tensor/rng.hpp"
#include "json.hpp"

namespace gafx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;
constexpr double kChildSeconds = 10.0;
constexpr std::size_t kChildren = 3;

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

}  // namespace

const std::vector<std::string>& gtzan_genres() {
  static const std::vector<std::string> g{"blues", "classical", "country", "disco",  "hiphop",
                                          "jazz",  "metal",     "pop",     "reggae", "rock"};
  return g;
}

const char* split_name(Split s) { return s == Split::train ? "train" : "eval"; }

std::size_t DatasetIndex::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [s](const DatasetEntry& e) { return e.split == s; }));
}

std::vector<std::size_t> DatasetIndex::per_class_count(Split s) const {
  std::vector<std::size_t> n(genres.size(), 0);
  for (const auto& e : entries) {
    if (e.split == s) ++n.at(static_cast<std::size_t>(e.label));
  }
  return n;
}

std::vector<const DatasetEntry*> DatasetIndex::select(Split s) const {
  std::vector<const DatasetEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

std::string DatasetIndex::to_json() const {
  json j;
  j["format"] = "gafx-manifest";
  j["version"] = kManifestVersion;
  j["seed"] = seed;
  j["augmented"] = augmented;
  j["genres"] = genres;
  j["counts"] = {{"train", count(Split::train)}, {"eval", count(Split::eval)}};
  auto& arr = j["entries"] = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"id", e.id},
                   {"parent", e.parent},
                   {"path", e.path},
                   {"label", e.label},
                   {"sample_rate", e.sample_rate},
                   {"channels", e.channels},
                   {"samples", e.samples},
                   {"offset", e.offset},
                   {"length", e.length},
                   {"split", split_name(e.split)}});
  }
  return j.dump(2) + "\n";
}

DatasetIndex DatasetIndex::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "gafx-manifest") throw FormatError("not a gafx manifest");
    const int version = j.at("version").get<int>();
    if (version != kManifestVersion) throw FormatError("unsupported manifest version " + std::to_string(version));
    DatasetIndex idx;
    idx.seed = j.at("seed").get<std::uint64_t>();
    idx.augmented = j.at("augmented").get<bool>();
    idx.genres = j.at("genres").get<std::vector<std::string>>();
    for (const auto& x : j.at("entries")) {
      DatasetEntry e;
      e.id = x.at("id").get<std::string>();
      e.parent = x.at("parent").get<std::string>();
      e.path = x.at("path").get<std::string>();
      e.label = x.at("label").get<int>();
      e.sample_rate = x.at("sample_rate").get<int>();
      e.channels = x.at("channels").get<std::size_t>();
      e.samples = x.at("samples").get<std::size_t>();
      e.offset = x.at("offset").get<std::size_t>();
      e.length = x.at("length").get<std::size_t>();
      const std::string split = x.at("split").get<std::string>();
      if (split != "train" && split != "eval") throw FormatError("entry " + e.id + ": bad split '" + split + "'");
      e.split = split == "train" ? Split::train : Split::eval;
      if (e.label < 0 || static_cast<std::size_t>(e.label) >= idx.genres.size()) {
        throw FormatError("entry " + e.id + ": label " + std::to_string(e.label) + " out of range");
      }
      idx.entries.push_back(std::move(e));
    }
    return idx;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

void DatasetIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write manifest " + path);
  out << to_json();
  if (!out) throw IngestionError("failed writing manifest " + path);
}

DatasetIndex DatasetIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void stratified_split(std::vector<DatasetEntry>& entries, std::size_t num_classes, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (static_cast<std::size_t>(entries[i].label) == c) members.push_back(i);
    }
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) entries[members[k]].split = k < n_train ? Split::train : Split::eval;
  }
}

DatasetIndex build_index(const std::string& root, std::uint64_t seed, const std::vector<std::string>& genres_in) {
  const fs::path base(root);
  if (!fs::is_directory(base)) throw IngestionError("dataset directory " + root + " does not exist");
  std::vector<std::string> genres = genres_in;
  if (genres.empty()) {
    for (const auto& d : fs::directory_iterator(base)) {
      if (d.is_directory()) genres.push_back(d.path().filename().string());
    }
    std::sort(genres.begin(), genres.end());
  }
  if (genres.empty()) throw IngestionError("dataset directory " + root + " has no genre subdirectories");

  std::vector<std::string> missing, unreadable;
  DatasetIndex idx;
  idx.genres = genres;
  idx.seed = seed;
  for (std::size_t g = 0; g < genres.size(); ++g) {
    const fs::path dir = base / genres[g];
    if (!fs::is_directory(dir)) {
      missing.push_back(dir.string());
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file() && f.path().extension() == ".wav") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) missing.push_back(dir.string() + " (no .wav files)");
    for (const auto& f : files) {
      try {
        const auto clip = load_wav(f.string());
        DatasetEntry e;
        e.parent = f.stem().string();
        e.id = e.parent;
        e.path = f.string();
        e.label = static_cast<int>(g);
        e.sample_rate = clip.sample_rate;
        e.channels = clip.num_channels();
        e.samples = clip.length();
        e.length = clip.length();
        idx.entries.push_back(std::move(e));
      } catch (const Error& err) {
        unreadable.push_back(f.string() + ": " + err.what());
      }
    }
  }
  if (!missing.empty()) throw IngestionError("missing genre directories:" + join_list(missing));
  if (!unreadable.empty()) throw IngestionError("unreadable audio files:" + join_list(unreadable));
  stratified_split(idx.entries, genres.size(), seed);
  return idx;
}

DatasetIndex augment_split(const DatasetIndex& index) {
  DatasetIndex out;
  out.genres = index.genres;
  out.seed = index.seed;
  out.augmented = true;
  for (const auto& e : index.entries) {
    if (e.split == Split::eval) {
      out.entries.push_back(e);
      continue;
    }
    if (e.offset != 0 || e.id != e.parent) throw ContractError("augment_split: entry " + e.id + " is already a child clip");
    const auto child = static_cast<std::size_t>(std::llround(kChildSeconds * e.sample_rate));
    for (std::size_t k = 0; k < kChildren; ++k) {
      DatasetEntry c = e;
      c.id = e.parent + "#" + std::to_string(k);
      c.offset = k * child;
      c.length = child;
      out.entries.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<std::string> split_overlap(const DatasetIndex& index) {
  std::set<std::string> train, eval;
  for (const auto& e : index.entries) (e.split == Split::train ? train : eval).insert(e.parent);
  std::vector<std::string> both;
  std::set_intersection(train.begin(), train.end(), eval.begin(), eval.end(), std::back_inserter(both));
  return both;
}

AudioClip load_entry(const DatasetEntry& entry) {
  const auto clip = load_wav(entry.path);
  if (entry.offset >= clip.length()) {
    throw IngestionError(entry.path + ": clip offset " + std::to_string(entry.offset) + " beyond " +
                         std::to_string(clip.length()) + " samples");
  }
  const std::size_t avail = std::min(entry.length, clip.length() - entry.offset);
  return fit_length(slice_clip(clip, entry.offset, avail), entry.length);
}

void synthesize_tone_corpus(const std::string& root, const std::vector<std::string>& genres,
                            std::size_t clips_per_genre, double seconds, int sample_rate, std::uint64_t seed,
                            double noise) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  const double lo = 200.0, hi = 0.3 * sample_rate;
  for (std::size_t g = 0; g < genres.size(); ++g) {
    const fs::path dir = fs::path(root) / genres[g];
    fs::create_directories(dir);
    const double t = genres.size() > 1 ? static_cast<double>(g) / static_cast<double>(genres.size() - 1) : 0.0;
    const double centre = lo * std::pow(hi / lo, t);
    for (std::size_t k = 0; k < clips_per_genre; ++k) {
      const double f = centre * rng.uniform(0.95, 1.05);
      const double amp = rng.uniform(0.3, 0.6);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::vector<float> x(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / sample_rate + phase);
        x[i] = static_cast<float>(noise > 0.0 ? s + noise * rng.uniform(-1.0, 1.0) : s);
      }
      char name[64];
      std::snprintf(name, sizeof name, "%s.%05zu.wav", genres[g].c_str(), k);
      save_wav((dir / name).string(), make_clip(std::move(x), sample_rate));
    }
  }
}

}  // namespace gafx
