#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "melcond/serialize.hpp"
#include "melcond/text.hpp"
#include "melcond/types.hpp"

// Deterministic harmonic + noise renderer for conditioning bundles. This is
// a reference synthesizer for closing the analysis loop, not a natural
// voice: vowels are band-limited harmonic stacks, consonants are colored
// noise, everything is reproducible from the seed.

namespace melcond {

struct RenderConfig {
  double harmonic_rolloff = 1.0;  // amplitude 1/k^rolloff for harmonic k
  std::size_t max_harmonics = 30;
  double noise_gain = 0.05;
  double crossfade_sec = 0.005;
  std::uint64_t seed = 0x6d656c636f6e64;  // arbitrary fixed default

  void check() const {
    if (max_harmonics < 1)
      throw ValidationError("RenderConfig: max_harmonics must be >= 1");
    if (crossfade_sec < 0.0)
      throw ValidationError("RenderConfig: crossfade must be >= 0");
  }
};

namespace detail {

// Knuth MMIX linear congruential generator; the constants are part of the
// output contract (bit-identical renders across platforms).
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  // uniform in [-1, 1)
  double next_bipolar() {
    return static_cast<double>(next_u64() >> 11) / 4503599627370496.0 - 1.0;
  }

 private:
  std::uint64_t state_;
};

struct PhoneSpan {
  std::size_t token;
  std::size_t frame_begin;
  std::size_t frame_end;  // exclusive
};

inline std::vector<PhoneSpan> token_spans(const ConditioningBundle& b) {
  std::vector<PhoneSpan> spans;
  const std::size_t frames = b.contour.frames();
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t tok = b.alignment.column_argmax(f);
    if (spans.empty() || spans.back().token != tok)
      spans.push_back({tok, f, f + 1});
    else
      spans.back().frame_end = f + 1;
  }
  return spans;
}

}  // namespace detail

inline MonoSignal render_voice(const ConditioningBundle& bundle,
                               const RenderConfig& config = {}) {
  config.check();
  {
    auto violations = validate_bundle(bundle);
    if (!violations.empty())
      throw ValidationError("render_voice: invalid bundle: " + violations[0]);
  }

  const AudioClock& clock = bundle.clock;
  const double sr = clock.sample_rate;
  const std::size_t frames = bundle.contour.frames();
  const std::size_t total = frames * clock.hop;
  const auto spans = detail::token_spans(bundle);

  // neighboring-vowel f0 per span, for sonorant coloration
  auto neighbor_vowel_hz = [&](std::size_t span_idx) -> double {
    for (std::size_t d = 1; d < spans.size(); ++d) {
      for (int dir : {1, -1}) {
        const long long j = static_cast<long long>(span_idx) + dir * static_cast<long long>(d);
        if (j < 0 || j >= static_cast<long long>(spans.size())) continue;
        const auto& s = spans[j];
        for (std::size_t f = s.frame_begin; f < s.frame_end; ++f)
          if (bundle.contour.voiced[f]) return bundle.contour.f0[f];
      }
    }
    return 0.0;
  };

  // per-sample instantaneous f0, linearly interpolated between frame centers
  auto sample_f0 = [&](std::size_t n) -> double {
    const double u = static_cast<double>(n) / clock.hop;
    std::size_t f = std::min(static_cast<std::size_t>(u), frames - 1);
    const std::size_t g = std::min(f + 1, frames - 1);
    const bool vf = bundle.contour.voiced[f], vg = bundle.contour.voiced[g];
    if (vf && vg) {
      const double w = u - static_cast<double>(f);
      return bundle.contour.f0[f] +
             w * (bundle.contour.f0[g] - bundle.contour.f0[f]);
    }
    if (vf) return bundle.contour.f0[f];
    if (vg) return bundle.contour.f0[g];
    return 0.0;
  };

  MonoSignal out;
  out.sample_rate = clock.sample_rate;
  out.samples.assign(total, 0.0f);

  detail::Lcg rng(config.seed);
  const std::size_t fade_samples =
      static_cast<std::size_t>(std::lround(config.crossfade_sec * sr));

  double phase = 0.0;        // voiced harmonic phase
  double aux_phase = 0.0;    // sonorant hum phase
  for (std::size_t si = 0; si < spans.size(); ++si) {
    const auto& span = spans[si];
    const std::string& phone = bundle.phonemes.tokens[span.token];
    const std::size_t n0 = span.frame_begin * clock.hop;
    const std::size_t n1 = std::min(span.frame_end * clock.hop, total);
    const std::size_t span_len = n1 - n0;
    const std::size_t fade = std::min(fade_samples, span_len / 2);

    const bool silence = is_silence(phone);
    ConsonantClass cls = ConsonantClass::sonorant;
    if (!silence && !is_vowel(phone)) cls = consonant_class(phone);
    const double hum_hz =
        (!silence && !is_vowel(phone) && cls == ConsonantClass::sonorant)
            ? neighbor_vowel_hz(si)
            : 0.0;
    const std::size_t burst_samples =
        static_cast<std::size_t>(std::lround(0.020 * sr));

    for (std::size_t n = n0; n < n1; ++n) {
      const std::size_t frame = std::min(n / clock.hop, frames - 1);
      const bool voiced = bundle.contour.voiced[frame] != 0;
      double v = 0.0;
      if (voiced) {
        const double f0 = sample_f0(n);
        if (f0 > 0.0) {
          phase += 2.0 * std::numbers::pi * f0 / sr;
          // keep every harmonic below Nyquist
          const std::size_t k_max = std::min<std::size_t>(
              config.max_harmonics,
              static_cast<std::size_t>(0.45 * sr / f0));
          for (std::size_t k = 1; k <= std::max<std::size_t>(k_max, 1); ++k)
            v += std::sin(k * phase) / std::pow(k, config.harmonic_rolloff);
        }
      } else if (silence) {
        v = 0.0;
        rng.next_u64();  // keep the noise stream position deterministic
      } else {
        switch (cls) {
          case ConsonantClass::plosive: {
            const double r = rng.next_bipolar();
            v = (n - n0 < burst_samples) ? config.noise_gain * r : 0.0;
            break;
          }
          case ConsonantClass::fricative:
            v = config.noise_gain * rng.next_bipolar();
            break;
          case ConsonantClass::sonorant: {
            rng.next_u64();
            if (hum_hz > 0.0) {
              aux_phase += 2.0 * std::numbers::pi * hum_hz / sr;
              v = 0.15 * std::sin(aux_phase);
            }
            break;
          }
        }
      }
      // linear fades at phone boundaries
      double env = 1.0;
      if (fade > 0) {
        const std::size_t from_start = n - n0;
        const std::size_t from_end = n1 - 1 - n;
        if (from_start < fade)
          env = std::min(env, static_cast<double>(from_start + 1) / fade);
        if (from_end < fade)
          env = std::min(env, static_cast<double>(from_end + 1) / fade);
      }
      out.samples[n] = static_cast<float>(v * env);
    }
  }

  // peak-normalize to -1 dBFS
  float peak = 0.0f;
  for (float v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0f) {
    const float gain = static_cast<float>(std::pow(10.0, -1.0 / 20.0)) / peak;
    for (float& v : out.samples) v *= gain;
  }
  return out;
}

// Renders each bundle with a seeded per-voice detune and onset jitter and
// mixes them. Voice v uses seed config.seed + v for its own render.
inline MonoSignal render_choir(const std::vector<ConditioningBundle>& bundles,
                               const RenderConfig& config = {},
                               double detune_cents = 8.0,
                               double onset_jitter_ms = 10.0) {
  config.check();
  if (bundles.empty())
    throw ValidationError("render_choir: no bundles");
  const std::size_t frames = bundles.front().contour.frames();
  for (const auto& b : bundles)
    if (b.contour.frames() != frames)
      throw ValidationError("render_choir: bundles have mismatched frame "
                            "counts");

  const AudioClock& clock = bundles.front().clock;
  const std::size_t total = frames * clock.hop;
  std::vector<double> mix(total, 0.0);

  detail::Lcg voice_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t v = 0; v < bundles.size(); ++v) {
    const double cents = detune_cents * voice_rng.next_bipolar();
    const double jitter_ms = onset_jitter_ms * voice_rng.next_bipolar();
    const double factor = std::pow(2.0, cents / 1200.0);

    ConditioningBundle voiced = bundles[v];
    for (std::size_t i = 0; i < voiced.contour.frames(); ++i)
      if (voiced.contour.voiced[i])
        voiced.contour.f0[i] =
            static_cast<float>(voiced.contour.f0[i] * factor);

    RenderConfig vc = config;
    vc.seed = config.seed + v;
    const MonoSignal rendered = render_voice(voiced, vc);

    const long long shift = static_cast<long long>(
        std::lround(jitter_ms / 1000.0 * clock.sample_rate));
    for (std::size_t n = 0; n < total; ++n) {
      const long long src = static_cast<long long>(n) - shift;
      if (src >= 0 && src < static_cast<long long>(total))
        mix[n] += rendered.samples[src];
    }
  }

  MonoSignal out;
  out.sample_rate = clock.sample_rate;
  out.samples.resize(total);
  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? std::pow(10.0, -1.0 / 20.0) / peak : 1.0;
  for (std::size_t n = 0; n < total; ++n)
    out.samples[n] = static_cast<float>(mix[n] * gain);
  return out;
}

}  // namespace melcond
