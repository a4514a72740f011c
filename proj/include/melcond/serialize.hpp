#pragma once

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "melcond/types.hpp"

// MCB1 container: magic "MCB1", version u16, clock, speaker/gst ids, phoneme
// table, f0 array as f32 LE, packed voiced bitset, then the alignment map
// (hard = per-frame token indices, soft = dense row-major f32).

namespace melcond {

constexpr double kColumnSumTolerance = 1e-6;

// Lists every invariant violation; empty result means the bundle is
// serializable.
inline std::vector<std::string> validate_bundle(const ConditioningBundle& b) {
  std::vector<std::string> out;
  try {
    b.clock.check();
  } catch (const ValidationError& e) {
    out.push_back(e.what());
  }
  if (b.phonemes.tokens.empty())
    out.push_back("phonemes: sequence must be non-empty");
  if (b.contour.frames() == 0) out.push_back("contour: must have >= 1 frame");
  if (b.contour.f0.size() != b.contour.voiced.size())
    out.push_back("contour: f0 and voiced lengths differ");
  const double nyquist = b.clock.sample_rate / 2.0;
  for (std::size_t i = 0;
       i < std::min(b.contour.f0.size(), b.contour.voiced.size()); ++i) {
    const float f = b.contour.f0[i];
    const bool v = b.contour.voiced[i] != 0;
    if (!v && f != 0.0f) {
      out.push_back("contour: frame " + std::to_string(i) +
                    " unvoiced but f0 != 0");
    } else if (v && (f <= 0.0f || f >= nyquist || !std::isfinite(f))) {
      out.push_back("contour: frame " + std::to_string(i) +
                    " voiced f0 outside (0, sample_rate/2)");
    }
  }
  if (b.alignment.frames() != b.contour.frames())
    out.push_back("alignment: frame count != contour length");
  if (b.alignment.tokens() != b.phonemes.size())
    out.push_back("alignment: token count != phoneme count");
  if (b.alignment.kind() == AlignmentMap::Kind::hard) {
    for (std::size_t f = 0; f < b.alignment.frames(); ++f) {
      if (b.alignment.frame_tokens()[f] >= b.alignment.tokens()) {
        out.push_back("alignment: frame " + std::to_string(f) +
                      " token index out of range");
      }
    }
  } else {
    for (std::size_t f = 0; f < b.alignment.frames(); ++f) {
      double s = b.alignment.column_sum(f);
      if (std::abs(s - 1.0) > kColumnSumTolerance) {
        out.push_back("alignment: column " + std::to_string(f) +
                      " sum " + std::to_string(s) + " != 1");
      }
      for (std::size_t t = 0; t < b.alignment.tokens(); ++t) {
        if (b.alignment.weight(t, f) < 0.0f) {
          out.push_back("alignment: negative weight at (" + std::to_string(t) +
                        ", " + std::to_string(f) + ")");
          break;
        }
      }
    }
  }
  return out;
}

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}

  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > size_)
      throw ParseError(std::string("truncated payload reading ") + what, pos_);
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                      static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32(const char* what) {
    std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_bundle(
    const ConditioningBundle& b) {
  auto violations = validate_bundle(b);
  if (!violations.empty())
    throw ValidationError("cannot serialize invalid bundle: " + violations[0]);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'C', 'B', '1'});
  detail::put_u16(out, 1);
  detail::put_u32(out, b.clock.sample_rate);
  detail::put_u32(out, b.clock.hop);
  detail::put_u32(out, b.clock.fft_size);
  detail::put_u32(out, b.clock.window_size);
  detail::put_u32(out, b.speaker_id);
  out.push_back(b.gst_id ? 1 : 0);
  if (b.gst_id) detail::put_u32(out, *b.gst_id);

  detail::put_u32(out, static_cast<std::uint32_t>(b.phonemes.size()));
  for (const auto& tok : b.phonemes.tokens) {
    if (tok.size() > 255)
      throw ValidationError("phoneme token longer than 255 bytes");
    out.push_back(static_cast<std::uint8_t>(tok.size()));
    out.insert(out.end(), tok.begin(), tok.end());
  }

  const std::size_t frames = b.contour.frames();
  detail::put_u32(out, static_cast<std::uint32_t>(frames));
  for (float v : b.contour.f0) detail::put_f32(out, v);
  std::vector<std::uint8_t> bits((frames + 7) / 8, 0);
  for (std::size_t i = 0; i < frames; ++i)
    if (b.contour.voiced[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.insert(out.end(), bits.begin(), bits.end());

  out.push_back(static_cast<std::uint8_t>(b.alignment.kind()));
  if (b.alignment.kind() == AlignmentMap::Kind::hard) {
    for (std::uint32_t t : b.alignment.frame_tokens()) detail::put_u32(out, t);
  } else {
    for (float w : b.alignment.weights()) detail::put_f32(out, w);
  }
  return out;
}

inline ConditioningBundle deserialize_bundle(
    const std::uint8_t* data, std::size_t size) {
  detail::ByteReader r(data, size);

  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, "MCB1", 4) != 0)
    throw ParseError("bad magic (expected MCB1)", 0);
  std::uint16_t version = r.u16("version");
  if (version != 1)
    throw ParseError("unsupported format version " + std::to_string(version),
                     4);

  ConditioningBundle b;
  b.clock.sample_rate = r.u32("sample_rate");
  b.clock.hop = r.u32("hop");
  b.clock.fft_size = r.u32("fft_size");
  b.clock.window_size = r.u32("window_size");
  b.speaker_id = r.u32("speaker_id");
  std::uint8_t gst_flag = r.u8("gst_flag");
  if (gst_flag > 1) throw ParseError("gst_flag must be 0 or 1", r.pos() - 1);
  if (gst_flag == 1) b.gst_id = r.u32("gst_id");

  std::uint32_t n_phones = r.u32("phoneme count");
  b.phonemes.tokens.reserve(n_phones);
  for (std::uint32_t i = 0; i < n_phones; ++i) {
    std::uint8_t len = r.u8("phoneme length");
    std::string tok(len, '\0');
    r.bytes(tok.data(), len, "phoneme bytes");
    b.phonemes.tokens.push_back(std::move(tok));
  }

  std::uint32_t frames = r.u32("frame count");
  b.contour.f0.resize(frames);
  for (std::uint32_t i = 0; i < frames; ++i) b.contour.f0[i] = r.f32("f0");
  std::vector<std::uint8_t> bits((frames + 7) / 8);
  r.bytes(bits.data(), bits.size(), "voiced bitset");
  b.contour.voiced.resize(frames);
  for (std::uint32_t i = 0; i < frames; ++i)
    b.contour.voiced[i] = (bits[i / 8] >> (i % 8)) & 1u;

  std::uint8_t kind = r.u8("alignment kind");
  if (kind == 0) {
    std::vector<std::uint32_t> idx(frames);
    for (std::uint32_t i = 0; i < frames; ++i) idx[i] = r.u32("token index");
    b.alignment = AlignmentMap::make_hard(std::move(idx), n_phones);
  } else if (kind == 1) {
    std::vector<float> w(static_cast<std::size_t>(n_phones) * frames);
    for (auto& v : w) v = r.f32("alignment weight");
    b.alignment = AlignmentMap::make_soft(n_phones, frames, std::move(w));
  } else {
    throw ParseError("unknown alignment kind " + std::to_string(kind),
                     r.pos() - 1);
  }

  if (!r.at_end())
    throw ParseError("trailing bytes after bundle payload", r.pos());

  auto violations = validate_bundle(b);
  if (!violations.empty())
    throw ValidationError("deserialized bundle invalid: " + violations[0]);
  return b;
}

inline ConditioningBundle deserialize_bundle(
    const std::vector<std::uint8_t>& bytes) {
  return deserialize_bundle(bytes.data(), bytes.size());
}

}  // namespace melcond
