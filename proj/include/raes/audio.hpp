#pragma once

// Mono audio container and a small RIFF/WAVE reader/writer.
//
// Only the formats the toolkit exchanges are supported: mono, 16-bit PCM or
// 32-bit IEEE float, little-endian. Anything else is rejected with
// AudioFormatError.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "raes/error.hpp"

namespace raes {

inline constexpr double kDefaultSampleRate = 16000.0;

struct AudioSignal {
  std::vector<float> samples;
  double sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  void validate() const {
    if (!(sample_rate > 0.0)) throw InvalidArgument("sample_rate must be positive");
    for (float v : samples) {
      if (!std::isfinite(v)) throw InvalidArgument("audio contains non-finite samples");
    }
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace wav_detail {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

inline std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace wav_detail

inline AudioSignal decode_wav(std::span<const std::uint8_t> bytes,
                              const std::string& origin = "<memory>") {
  using namespace wav_detail;
  auto fail = [&](const std::string& why) {
    throw AudioFormatError(origin + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail("fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible && chunk_size >= 26) {
        format = read_u16(f + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      if (channels != 1) {
        fail("expected mono audio, got " + std::to_string(channels) + " channels");
      }
      AudioSignal out;
      out.sample_rate = rate;
      const std::uint8_t* d = bytes.data() + body;
      if (format == kFormatPcm && bits == 16) {
        const std::size_t n = chunk_size / 2;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto raw = static_cast<std::int16_t>(read_u16(d + 2 * i));
          out.samples[i] = static_cast<float>(raw) / 32768.0f;
        }
      } else if (format == kFormatFloat && bits == 32) {
        const std::size_t n = chunk_size / 4;
        out.samples.resize(n);
        std::memcpy(out.samples.data(), d, n * 4);
      } else {
        fail("unsupported sample format (need 16-bit PCM or 32-bit float)");
      }
      for (float v : out.samples) {
        if (!std::isfinite(v)) fail("non-finite sample");
      }
      return out;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  fail("missing data chunk");
  return {};
}

inline std::vector<std::uint8_t> encode_wav(const AudioSignal& signal,
                                            WavEncoding encoding = WavEncoding::kFloat32) {
  using namespace wav_detail;
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block_align = bits / 8;
  const auto rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(signal.size() * block_align);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  if (is_float) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(signal.samples.data());
    out.insert(out.end(), p, p + data_bytes);
  } else {
    for (float v : signal.samples) {
      const float clamped = std::clamp(v, -1.0f, 1.0f);
      const auto q = static_cast<std::int16_t>(
          std::clamp(std::lround(clamped * 32768.0f), -32768l, 32767l));
      put_u16(out, static_cast<std::uint16_t>(q));
    }
  }
  return out;
}

inline AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioFormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

// Reads a WAV and additionally enforces the expected sample rate.
inline AudioSignal read_wav(const std::filesystem::path& path, double expected_rate) {
  AudioSignal s = read_wav(path);
  if (std::lround(s.sample_rate) != std::lround(expected_rate)) {
    throw AudioFormatError(path.string() + ": sample rate " +
                           std::to_string(std::lround(s.sample_rate)) + " Hz, expected " +
                           std::to_string(std::lround(expected_rate)) + " Hz");
  }
  return s;
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& signal,
                      WavEncoding encoding = WavEncoding::kFloat32) {
  const auto bytes = encode_wav(signal, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AudioFormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw AudioFormatError("short write to " + path.string());
}

}  // namespace raes
