#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "melcond/types.hpp"

// RIFF WAV reader/writer. Reading accepts 16/24-bit PCM and 32-bit float,
// mono or stereo (stereo is downmixed by averaging). Writing emits 16-bit
// PCM mono.

namespace melcond {

namespace detail {

inline std::uint32_t rd_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

inline MonoSignal read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open wav file: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw ParseError("not a RIFF WAV file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const std::uint8_t* samples = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t size = detail::rd_u32(data.data() + pos + 4);
    const std::uint8_t* body = data.data() + pos + 8;
    if (pos + 8 + size > data.size())
      throw ParseError("truncated wav chunk in " + path, pos);
    if (std::memcmp(id, "fmt ", 4) == 0 && size >= 16) {
      format = detail::rd_u16(body);
      channels = detail::rd_u16(body + 2);
      sample_rate = detail::rd_u32(body + 4);
      bits = detail::rd_u16(body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      samples = body;
      data_size = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (!samples || channels == 0)
    throw ParseError("wav file missing fmt/data chunks: " + path);
  if (channels > 2)
    throw ParseError("wav file has more than two channels: " + path);

  const bool is_float = format == 3;
  if (!is_float && format != 1)
    throw ParseError("unsupported wav format tag " + std::to_string(format) +
                     " in " + path);
  if (is_float && bits != 32)
    throw ParseError("only 32-bit float wav supported: " + path);
  if (!is_float && bits != 16 && bits != 24)
    throw ParseError("only 16/24-bit PCM wav supported: " + path);

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_bytes;

  MonoSignal sig;
  sig.sample_rate = sample_rate;
  sig.samples.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = samples + f * frame_bytes + c * bytes_per_sample;
      double v;
      if (is_float) {
        float fv;
        std::memcpy(&fv, p, 4);
        v = fv;
      } else if (bits == 16) {
        std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        v = s / 32768.0;
      } else {
        std::int32_t s = (p[0] << 8) | (p[1] << 16) | (p[2] << 24);
        v = (s >> 8) / 8388608.0;
      }
      acc += v;
    }
    sig.samples[f] = static_cast<float>(acc / channels);
  }
  return sig;
}

inline void write_wav(const std::string& path, const MonoSignal& signal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot create wav file: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_size = n * 2;
  const std::uint32_t sr = signal.sample_rate;

  auto w16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto w32 = [&](std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
  };

  out.write("RIFF", 4);
  w32(36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  w32(16);
  w16(1);   // PCM
  w16(1);   // mono
  w32(sr);
  w32(sr * 2);
  w16(2);
  w16(16);
  out.write("data", 4);
  w32(data_size);
  for (float v : signal.samples) {
    const double clamped = std::clamp(static_cast<double>(v), -1.0, 1.0);
    const std::int16_t s =
        static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    w16(static_cast<std::uint16_t>(s));
  }
  if (!out) throw ParseError("failed writing wav file: " + path);
}

}  // namespace melcond
