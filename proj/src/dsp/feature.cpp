// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/feature.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gafx/error.hpp"

namespace gafx {
namespace {

constexpr char kDumpMagic[8] = {'G', 'A', 'F', 'X', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kDumpVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path, const char* field) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path + ": truncated feature dump while reading " + field);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

const char* feature_source_name(FeatureSource source) {
  switch (source) {
    case FeatureSource::mel_baseline: return "mel-baseline";
    case FeatureSource::gafx_u: return "gafx-u";
    case FeatureSource::gafx_r: return "gafx-r";
    case FeatureSource::gafx_a: return "gafx-a";
  }
  return "unknown";
}

template <typename T>
Tensor<T> freq_group_pool(const Tensor<T>& x, std::size_t groups) {
  if (x.dim() != 2) throw DimensionError("freq_group_pool: expected [T, F], got " + shape_str(x.shape()));
  const std::size_t rows = x.extent(0), F = x.extent(1);
  if (groups == 0 || F % groups != 0) {
    throw DimensionError("freq_group_pool: " + std::to_string(F) + " bins do not split into " +
                         std::to_string(groups) + " groups");
  }
  const std::size_t width = F / groups;
  const double inv = 1.0 / static_cast<double>(width);
  const auto& xd = x.node()->data;
  std::vector<T> y(rows * groups);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) acc += xd[r * F + g * width + j];
      y[r * groups + g] = static_cast<T>(acc * inv);
    }
  }
  auto out = detail::make_output<T>("freq_group_pool", {rows, groups}, std::move(y));
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, rows, groups, width, F, inv](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < groups; ++g) {
          const T v = static_cast<T>(gy[r * groups + g] * inv);
          for (std::size_t j = 0; j < width; ++j) (*gx)[r * F + g * width + j] += v;
        }
      }
    });
  }
  return out;
}

NormStats feature_stats(const Tensor<float>& values) {
  const auto d = values.data();
  double mu = 0.0;
  for (float v : d) mu += v;
  mu /= static_cast<double>(d.size());
  double var = 0.0;
  for (float v : d) var += (v - mu) * (v - mu);
  var /= static_cast<double>(d.size());
  return {mu, std::sqrt(var)};
}

FeatureMap normalize_feature(const FeatureMap& x, const NormStats& stats) {
  const double inv = 1.0 / std::max(stats.std, kStdFloor);
  std::vector<float> y(x.values.numel());
  const auto d = x.values.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>((d[i] - stats.mean) * inv);
  FeatureMap out;
  out.values = Tensor<float>(x.values.shape(), std::move(y));
  out.source = x.source;
  return out;
}

FeatureMap normalize_feature(const FeatureMap& x) { return normalize_feature(x, feature_stats(x.values)); }

template <typename T>
Tensor<T> standardize(const Tensor<T>& x) {
  const auto& xd = x.node()->data;
  const std::size_t n = xd.size();
  double mu = 0.0;
  for (T v : xd) mu += v;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (T v : xd) var += (v - mu) * (v - mu);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  const bool clamped = sd < kStdFloor;
  const double inv = 1.0 / (clamped ? kStdFloor : sd);
  std::vector<T> xhat(n);
  for (std::size_t i = 0; i < n; ++i) xhat[i] = static_cast<T>((xd[i] - mu) * inv);
  auto out = detail::make_output<T>("standardize", x.shape(), xhat);
  if (detail::needs_grad<T>({&x})) {
    auto xn = x.node();
    detail::attach<T>(out, {&x}, [xn, n, inv, clamped, xhat = std::move(xhat)](const std::vector<T>& gy) {
      auto* gx = detail::grad_sink(xn);
      if (!gx) return;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s1 += gy[i];
        s2 += gy[i] * xhat[i];
      }
      const double m1 = s1 / static_cast<double>(n);
      const double m2 = clamped ? 0.0 : s2 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) (*gx)[i] += static_cast<T>(inv * (gy[i] - m1 - xhat[i] * m2));
    });
  }
  return out;
}

void write_feature_dump(const std::string& path, const FeatureMap& feature) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write feature dump " + path);
  out.write(kDumpMagic, sizeof(kDumpMagic));
  put_u32(out, kDumpVersion);
  put_u32(out, static_cast<std::uint32_t>(feature.time_steps()));
  put_u32(out, static_cast<std::uint32_t>(feature.freq_bins()));
  for (float v : feature.values.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  if (!out) throw FormatError("write failed for feature dump " + path);
}

FeatureMap read_feature_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature dump " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kDumpMagic, 8) != 0) {
    throw FormatError(path + ": not a GAFXFEAT feature dump");
  }
  const auto version = get_u32(in, path, "version");
  if (version != kDumpVersion) {
    throw FormatError(path + ": unsupported feature dump version " + std::to_string(version));
  }
  const auto T = get_u32(in, path, "T"), F = get_u32(in, path, "F");
  if (T == 0 || F == 0) throw FormatError(path + ": empty feature dump");
  std::vector<float> v(static_cast<std::size_t>(T) * F);
  for (auto& x : v) {
    const auto bits = get_u32(in, path, "values");
    std::memcpy(&x, &bits, 4);
  }
  FeatureMap fm;
  fm.values = Tensor<float>({T, F}, std::move(v));
  return fm;
}

template Tensor<float> freq_group_pool<float>(const Tensor<float>&, std::size_t);
template Tensor<double> freq_group_pool<double>(const Tensor<double>&, std::size_t);
template Tensor<float> standardize<float>(const Tensor<float>&);
template Tensor<double> standardize<double>(const Tensor<double>&);

}  // namespace gafx
