// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <string>

#include "gafx/tensor/tensor.hpp"

namespace gafx {

enum class FeatureSource { mel_baseline, gafx_u, gafx_r, gafx_a };

const char* feature_source_name(FeatureSource source);

// Time-by-frequency feature, [T, F].
struct FeatureMap {
  Tensor<float> values;
  FeatureSource source = FeatureSource::mel_baseline;

  std::size_t time_steps() const { return values.extent(0); }
  std::size_t freq_bins() const { return values.extent(1); }
};

// [T, F] -> [T, groups]: mean over contiguous groups of F / groups bins.
template <typename T>
Tensor<T> freq_group_pool(const Tensor<T>& x, std::size_t groups = 128);

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

constexpr double kStdFloor = 1e-5;

// Global mean and population standard deviation.
NormStats feature_stats(const Tensor<float>& values);

// (x - mean) / max(std, 1e-5).
FeatureMap normalize_feature(const FeatureMap& x, const NormStats& stats);
// Uses the map's own statistics.
FeatureMap normalize_feature(const FeatureMap& x);

// Differentiable global standardization of one map, same floor.
template <typename T>
Tensor<T> standardize(const Tensor<T>& x);

// "GAFXFEAT", u32 version 1, u32 T, u32 F, then T*F little-endian f32.
void write_feature_dump(const std::string& path, const FeatureMap& feature);
FeatureMap read_feature_dump(const std::string& path);

}  // namespace gafx
