#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace melcond {

// Thrown when an input violates a documented precondition or type invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a byte stream or text document cannot be decoded.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit ParseError(const std::string& msg)
      : std::runtime_error(msg), offset_(0) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Frame/sample bookkeeping shared by the STFT, pitch and score paths.
struct AudioClock {
  std::uint32_t sample_rate = 22050;
  std::uint32_t hop = 256;
  std::uint32_t fft_size = 1024;
  std::uint32_t window_size = 1024;

  void check() const {
    if (sample_rate == 0 || hop == 0 || fft_size == 0 || window_size == 0)
      throw ValidationError("AudioClock: all fields must be positive");
    if (window_size > fft_size)
      throw ValidationError("AudioClock: window_size must be <= fft_size");
    if (hop > window_size)
      throw ValidationError("AudioClock: hop must be <= window_size");
  }

  double frame_period_sec() const {
    return static_cast<double>(hop) / sample_rate;
  }

  bool operator==(const AudioClock&) const = default;
};

// Per-frame continuous f0 with voiced/unvoiced flags. Unvoiced frames carry
// f0 == 0 exactly.
struct PitchContour {
  std::vector<float> f0;
  std::vector<std::uint8_t> voiced;

  std::size_t frames() const { return f0.size(); }

  bool operator==(const PitchContour&) const = default;
};

// Cleaned, phonemized token sequence (ARPAbet plus "SIL").
struct PhonemeSequence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }

  bool operator==(const PhonemeSequence&) const = default;
};

// Token-by-frame column-stochastic attention matrix. Hard maps are stored as
// one token index per frame; soft maps as a dense row-major matrix.
class AlignmentMap {
 public:
  enum class Kind : std::uint8_t { hard = 0, soft = 1 };

  AlignmentMap() = default;

  static AlignmentMap make_hard(std::vector<std::uint32_t> frame_tokens,
                                std::size_t num_tokens) {
    AlignmentMap m;
    m.kind_ = Kind::hard;
    m.tokens_ = num_tokens;
    m.frames_ = frame_tokens.size();
    m.frame_tokens_ = std::move(frame_tokens);
    return m;
  }

  static AlignmentMap make_soft(std::size_t num_tokens, std::size_t num_frames,
                                std::vector<float> row_major) {
    if (row_major.size() != num_tokens * num_frames)
      throw ValidationError("AlignmentMap: weight buffer size mismatch");
    AlignmentMap m;
    m.kind_ = Kind::soft;
    m.tokens_ = num_tokens;
    m.frames_ = num_frames;
    m.weights_ = std::move(row_major);
    return m;
  }

  Kind kind() const { return kind_; }
  std::size_t tokens() const { return tokens_; }
  std::size_t frames() const { return frames_; }

  float weight(std::size_t token, std::size_t frame) const {
    if (kind_ == Kind::hard) return frame_tokens_[frame] == token ? 1.0f : 0.0f;
    return weights_[token * frames_ + frame];
  }

  // Argmax token for one column.
  std::size_t column_argmax(std::size_t frame) const {
    if (kind_ == Kind::hard) return frame_tokens_[frame];
    std::size_t best = 0;
    float best_w = weights_[frame];
    for (std::size_t t = 1; t < tokens_; ++t) {
      float w = weights_[t * frames_ + frame];
      if (w > best_w) {
        best_w = w;
        best = t;
      }
    }
    return best;
  }

  double column_sum(std::size_t frame) const {
    if (kind_ == Kind::hard) return frame_tokens_[frame] < tokens_ ? 1.0 : 0.0;
    double s = 0.0;
    for (std::size_t t = 0; t < tokens_; ++t) s += weights_[t * frames_ + frame];
    return s;
  }

  const std::vector<std::uint32_t>& frame_tokens() const {
    return frame_tokens_;
  }
  const std::vector<float>& weights() const { return weights_; }

  bool operator==(const AlignmentMap&) const = default;

 private:
  Kind kind_ = Kind::hard;
  std::size_t tokens_ = 0;
  std::size_t frames_ = 0;
  std::vector<std::uint32_t> frame_tokens_;
  std::vector<float> weights_;
};

// The serialized conditioning record: (T, S, P, R, Z-id) plus the clock it
// was produced under.
struct ConditioningBundle {
  AudioClock clock;
  PhonemeSequence phonemes;
  PitchContour contour;
  AlignmentMap alignment;
  std::uint32_t speaker_id = 0;
  std::optional<std::uint32_t> gst_id;

  bool operator==(const ConditioningBundle&) const = default;
};

// 80-band mel matrix, row-major (band x frame).
struct MelSpectrogram {
  enum class Scale : std::uint8_t { linear_power = 0, log_compressed = 1 };

  std::vector<float> values;  // 80 * frames
  std::size_t frames = 0;
  Scale scale = Scale::linear_power;

  static constexpr std::size_t kBands = 80;

  float at(std::size_t band, std::size_t frame) const {
    return values[band * frames + frame];
  }
};

// Mono audio carrier for the analysis path.
struct MonoSignal {
  std::vector<float> samples;
  std::uint32_t sample_rate = 22050;

  double duration_sec() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

}  // namespace melcond
