// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gafx/error.hpp"

namespace gafx {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'F', 'X', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    static_assert(std::is_trivially_copyable_v<U>);
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      put(std::bit_cast<Bits>(v));
    } else {
      for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : b_(b), end_(end) {}

  template <typename U>
  U get() {
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      return std::bit_cast<U>(get<Bits>());
    } else {
      need(sizeof(U));
      U v = 0;
      for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
      pos_ += sizeof(U);
      return v;
    }
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::string get_string() { return get_bytes(static_cast<std::size_t>(get<std::uint64_t>())); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) {
      throw IntegrityError("checkpoint truncated: need " + std::to_string(n) + " bytes at offset " +
                           std::to_string(pos_) + ", " + std::to_string(end_ - pos_) + " left");
    }
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

const StoredTensor* CheckpointFile::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& ckpt) {
  Writer w;
  w.bytes.insert(w.bytes.end(), std::begin(kMagic), std::end(kMagic));
  w.put<std::uint32_t>(CheckpointFile::kVersion);
  w.put_string(ckpt.config);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.bytes.insert(w.bytes.end(), t.name.begin(), t.name.end());
    w.put<std::uint8_t>(t.dtype == DType::f32 ? 0 : 1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.put<std::uint64_t>(d);
    for (double v : t.values) {
      if (t.dtype == DType::f32) {
        w.put(static_cast<float>(v));
      } else {
        w.put(v);
      }
    }
  }
  w.put(ckpt.norm.mean);
  w.put(ckpt.norm.std);
  w.put_string(ckpt.rng_state);
  w.put<std::uint64_t>(fnv1a64(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

CheckpointFile decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    if (bytes.size() < sizeof kMagic) throw IntegrityError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
    throw FormatError("not a GAFX checkpoint (bad magic)");
  }
  if (bytes.size() < sizeof kMagic + 4 + 8) throw IntegrityError("checkpoint truncated before the header ends");
  Reader header(bytes, bytes.size());
  header.get_bytes(sizeof kMagic);
  const auto version = header.get<std::uint32_t>();
  if (version != CheckpointFile::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
                      std::to_string(CheckpointFile::kVersion) + ")");
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  if (stored != fnv1a64(bytes.data(), body)) {
    throw IntegrityError("checkpoint checksum mismatch (file truncated or corrupted)");
  }

  Reader r(bytes, body);
  r.get_bytes(sizeof kMagic);
  r.get<std::uint32_t>();
  CheckpointFile ckpt;
  ckpt.config = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.get_bytes(r.get<std::uint32_t>());
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 1) throw FormatError("tensor " + t.name + ": unknown dtype code " + std::to_string(dtype));
    t.dtype = dtype == 0 ? DType::f32 : DType::f64;
    const auto rank = r.get<std::uint32_t>();
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
      n *= t.shape.back();
    }
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (n > (body - r.pos()) / width) throw IntegrityError("tensor " + t.name + " overruns the checkpoint");
    t.values.resize(n);
    for (auto& v : t.values) v = dtype == 0 ? static_cast<double>(r.get<float>()) : r.get<double>();
    ckpt.tensors.push_back(std::move(t));
  }
  ckpt.norm.mean = r.get<double>();
  ckpt.norm.std = r.get<double>();
  ckpt.rng_state = r.get_string();
  if (r.pos() != body) throw IntegrityError("checkpoint has " + std::to_string(body - r.pos()) + " trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::string& path, const CheckpointFile& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IngestionError("failed writing checkpoint " + path);
}

CheckpointFile read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template <typename T>
StoredTensor store_tensor(const std::string& name, const Tensor<T>& t) {
  StoredTensor s;
  s.name = name;
  s.dtype = t.dtype();
  s.shape = t.shape();
  const auto d = t.data();
  s.values.assign(d.begin(), d.end());
  return s;
}

template <typename T>
void restore_tensor(const StoredTensor& src, Tensor<T>& dst) {
  if (src.shape != dst.shape()) {
    throw ConfigError("tensor " + src.name + ": checkpoint shape " + shape_str(src.shape) + " vs model " +
                      shape_str(dst.shape()));
  }
  if (src.dtype != dst.dtype()) throw ConfigError("tensor " + src.name + ": dtype differs from the model");
  auto out = dst.mutable_data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(src.values[i]);
}

template StoredTensor store_tensor(const std::string&, const Tensor<float>&);
template StoredTensor store_tensor(const std::string&, const Tensor<double>&);
template void restore_tensor(const StoredTensor&, Tensor<float>&);
template void restore_tensor(const StoredTensor&, Tensor<double>&);

}  // namespace gafx
