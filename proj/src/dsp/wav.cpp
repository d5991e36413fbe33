// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gafx/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gafx/error.hpp"

namespace gafx {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t u16_at(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t u32_at(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

[[noreturn]] void fail(std::size_t offset, const std::string& what) {
  throw FormatError("wav: " + what + " at byte offset " + std::to_string(offset));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioClip parse_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12) fail(0, "file shorter than the 12-byte RIFF header");
  if (std::memcmp(b.data(), "RIFF", 4) != 0) fail(0, "missing RIFF tag");
  if (std::memcmp(b.data() + 8, "WAVE", 4) != 0) fail(8, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t off = 12;
  while (off + 8 <= b.size()) {
    const std::size_t chunk = off;
    const std::uint32_t size = u32_at(b, off + 4);
    const std::size_t body = off + 8;
    if (body + size > b.size()) {
      fail(chunk, "chunk '" + std::string(reinterpret_cast<const char*>(b.data() + off), 4) +
                      "' of " + std::to_string(size) + " bytes overruns the file");
    }
    if (std::memcmp(b.data() + off, "fmt ", 4) == 0) {
      if (size < 16) fail(chunk, "fmt chunk shorter than 16 bytes");
      std::uint16_t format = u16_at(b, body);
      channels = u16_at(b, body + 2);
      rate = u32_at(b, body + 4);
      const std::uint16_t align = u16_at(b, body + 12);
      bits = u16_at(b, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(chunk, "extensible fmt chunk shorter than 40 bytes");
        format = u16_at(b, body + 24);
      }
      if (format != kFormatPcm) fail(body, "unsupported codec " + std::to_string(format) + " (PCM required)");
      if (bits != 16) fail(body + 14, "unsupported bit depth " + std::to_string(bits) + " (16 required)");
      if (channels < 1 || channels > 2) {
        fail(body + 2, "unsupported channel count " + std::to_string(channels));
      }
      if (rate == 0) fail(body + 4, "sample rate is zero");
      if (align != channels * 2) fail(body + 12, "block alignment " + std::to_string(align) + " inconsistent");
      have_fmt = true;
    } else if (std::memcmp(b.data() + off, "data", 4) == 0) {
      if (!have_fmt) fail(chunk, "data chunk before fmt chunk");
      const std::size_t frame = 2u * channels;
      if (size % frame != 0) fail(chunk, "data size " + std::to_string(size) + " not a whole number of frames");
      const std::size_t n = size / frame;
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.channels.assign(channels, std::vector<float>(n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          const auto raw = static_cast<std::int16_t>(u16_at(b, body + (i * channels + c) * 2));
          clip.channels[c][i] = static_cast<float>(raw) / 32768.0f;
        }
      }
      return clip;
    }
    off = body + size + (size & 1u);
  }
  fail(off, have_fmt ? "no data chunk" : "no fmt chunk");
}

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("wav: cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  clip.validate();
  const auto channels = static_cast<std::uint16_t>(clip.num_channels());
  if (channels > 2) throw ContractError("wav: at most 2 channels can be written");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.length() * channels * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * channels * 2);
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::size_t i = 0; i < clip.length(); ++i) {
    for (const auto& c : clip.channels) {
      const double q = std::clamp(std::nearbyint(static_cast<double>(c[i]) * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  return out;
}

void save_wav(const std::string& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("wav: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("wav: write failed for " + path);
}

}  // namespace gafx
