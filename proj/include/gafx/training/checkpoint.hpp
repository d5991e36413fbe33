// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gafx/dsp/feature.hpp"
#include "gafx/tensor/tensor.hpp"

namespace gafx {

// Layout, little-endian throughout:
//   "GAFXCKPT" u32 version
//   u64 n, config JSON (n bytes)
//   u32 count, then per tensor: u32 name length, name, u8 dtype (0 f32, 1 f64),
//     u32 rank, u64 extents[rank], payload
//   f64 norm mean, f64 norm std
//   u64 n, rng state (n bytes)
//   u64 FNV-1a hash of every preceding byte
struct StoredTensor {
  std::string name;
  DType dtype = DType::f32;
  Shape shape;
  std::vector<double> values;  // widened; f32 payloads round-trip exactly
};

struct CheckpointFile {
  static constexpr std::uint32_t kVersion = 1;

  std::string config;  // JSON
  std::vector<StoredTensor> tensors;
  NormStats norm;
  std::string rng_state;

  const StoredTensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& ckpt);
// FormatError on a foreign magic or unknown version, IntegrityError on
// truncation or a checksum mismatch.
CheckpointFile decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::string& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);

template <typename T>
StoredTensor store_tensor(const std::string& name, const Tensor<T>& t);
// Copies values into `dst`, which must have the stored shape.
template <typename T>
void restore_tensor(const StoredTensor& src, Tensor<T>& dst);

}  // namespace gafx
