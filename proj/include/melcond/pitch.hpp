#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "melcond/dsp.hpp"
#include "melcond/types.hpp"

namespace melcond {

struct YinConfig {
  double harmonicity_threshold = 0.15;  // center of the usual 0.1-0.25 band
  double f_min = 50.0;
  double f_max = 1100.0;
  double silence_floor_db = -60.0;
  bool median_filter = false;  // optional 3-frame median on f0

  void check(const AudioClock& clock) const {
    if (!(f_min > 0.0 && f_min < f_max && f_max < clock.sample_rate / 2.0))
      throw ValidationError("YinConfig: need 0 < f_min < f_max < sr/2");
    if (harmonicity_threshold < 0.05 || harmonicity_threshold > 0.5)
      throw ValidationError(
          "YinConfig: harmonicity_threshold outside [0.05, 0.5]");
  }
};

struct VocalRange {
  double low = 0.0;
  double high = 0.0;

  void check() const {
    if (!(low > 0.0 && low < high))
      throw ValidationError("VocalRange: need 0 < low < high");
  }
};

struct YinFrameResult {
  double f0 = 0.0;
  bool voiced = false;
  double harmonicity = 1.0;  // CMND value at the chosen lag (or its minimum)
};

// Single-frame Yin: difference function, cumulative-mean normalization,
// absolute threshold with descent to the local minimum, parabolic lag
// refinement.
inline YinFrameResult yin_frame(const float* window, std::size_t length,
                                const YinConfig& config,
                                const AudioClock& clock) {
  if (length != clock.window_size)
    throw ValidationError("yin_frame: window length != clock.window_size");
  config.check(clock);

  const std::size_t half = length / 2;
  const double sr = clock.sample_rate;

  double energy = 0.0;
  for (std::size_t i = 0; i < length; ++i)
    energy += static_cast<double>(window[i]) * window[i];
  const double rms = std::sqrt(energy / length);
  const double silence_rms = std::pow(10.0, config.silence_floor_db / 20.0);

  std::size_t tau_min =
      static_cast<std::size_t>(std::floor(sr / config.f_max));
  std::size_t tau_max =
      static_cast<std::size_t>(std::ceil(sr / config.f_min));
  tau_min = std::max<std::size_t>(tau_min, 2);
  tau_max = std::min(tau_max, half - 1);
  if (tau_min >= tau_max)
    throw ValidationError("yin_frame: f_min/f_max leave no usable lag range");

  // d(tau) over the full search range; the running sum for the CMND needs
  // every lag from 1.
  std::vector<double> diff(tau_max + 2, 0.0);
  for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < half; ++j) {
      const double d = static_cast<double>(window[j]) - window[j + tau];
      acc += d * d;
    }
    diff[tau] = acc;
  }

  std::vector<double> cmnd(tau_max + 2, 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
    running += diff[tau];
    cmnd[tau] = running > 0.0 ? diff[tau] * tau / running : 1.0;
  }

  double min_cmnd = 1.0;
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau)
    min_cmnd = std::min(min_cmnd, cmnd[tau]);

  if (rms < silence_rms) return {0.0, false, min_cmnd};

  std::size_t tau_est = 0;
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
    if (cmnd[tau] < config.harmonicity_threshold) {
      while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
      tau_est = tau;
      break;
    }
  }
  if (tau_est == 0) return {0.0, false, min_cmnd};

  // Parabolic interpolation over (tau-1, tau, tau+1).
  double tau_refined = static_cast<double>(tau_est);
  if (tau_est > 1 && tau_est + 1 < cmnd.size()) {
    const double a = cmnd[tau_est - 1];
    const double b = cmnd[tau_est];
    const double c = cmnd[tau_est + 1];
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-12) {
      double shift = 0.5 * (a - c) / denom;
      shift = std::clamp(shift, -1.0, 1.0);
      tau_refined += shift;
    }
  }

  const double f0 = sr / tau_refined;
  // octave-error spikes outside the configured band become unvoiced
  if (f0 < config.f_min || f0 > config.f_max) return {0.0, false, min_cmnd};
  return {f0, true, cmnd[tau_est]};
}

inline YinFrameResult yin_frame(const std::vector<float>& window,
                                const YinConfig& config,
                                const AudioClock& clock) {
  return yin_frame(window.data(), window.size(), config, clock);
}

// Contour extraction at hop-spaced centers with the same reflect padding as
// the STFT, so len(contour) == frame_count(len(signal)).
inline PitchContour extract_contour(const MonoSignal& signal,
                                    const YinConfig& config,
                                    const AudioClock& clock) {
  clock.check();
  config.check(clock);
  if (signal.samples.empty())
    throw ValidationError("extract_contour: empty signal");
  if (signal.sample_rate != clock.sample_rate)
    throw ValidationError("extract_contour: signal/clock sample rate mismatch");

  const std::size_t pad = clock.fft_size / 2;
  const std::vector<float> padded = detail::reflect_pad(signal.samples, pad);
  const std::size_t n_frames = frame_count(signal.samples.size(), clock);
  const std::size_t win_off = (clock.fft_size - clock.window_size) / 2;

  PitchContour contour;
  contour.f0.resize(n_frames, 0.0f);
  contour.voiced.resize(n_frames, 0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const float* window = padded.data() + f * clock.hop + win_off;
    const YinFrameResult r =
        yin_frame(window, clock.window_size, config, clock);
    contour.f0[f] = r.voiced ? static_cast<float>(r.f0) : 0.0f;
    contour.voiced[f] = r.voiced ? 1 : 0;
  }

  if (config.median_filter && n_frames >= 3) {
    std::vector<float> filtered = contour.f0;
    for (std::size_t f = 1; f + 1 < n_frames; ++f) {
      if (!contour.voiced[f]) continue;
      float a = contour.f0[f - 1], b = contour.f0[f], c = contour.f0[f + 1];
      filtered[f] = std::max(std::min(a, b), std::min(std::max(a, b), c));
      if (filtered[f] <= 0.0f) filtered[f] = b;
    }
    contour.f0 = std::move(filtered);
  }
  return contour;
}

struct ScaledContour {
  PitchContour contour;
  double factor = 1.0;
};

enum class ScaleMode { octave_snap, free };

namespace detail {

inline std::size_t count_in_range(const PitchContour& c, double factor,
                                  const VocalRange& range) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < c.frames(); ++i) {
    if (!c.voiced[i]) continue;
    const double f = c.f0[i] * factor;
    if (f >= range.low && f <= range.high) ++n;
  }
  return n;
}

}  // namespace detail

// Multiplies every voiced frame by one constant chosen to put as many frames
// as possible inside the vocal range; ties resolve toward factor 1.
inline ScaledContour scale_contour(const PitchContour& contour,
                                   const VocalRange& range, ScaleMode mode) {
  range.check();
  std::vector<double> voiced_f0;
  for (std::size_t i = 0; i < contour.frames(); ++i)
    if (contour.voiced[i]) voiced_f0.push_back(contour.f0[i]);
  if (voiced_f0.empty())
    throw ValidationError("scale_contour: contour has no voiced frames");

  double best_factor = 1.0;
  if (mode == ScaleMode::octave_snap) {
    std::size_t best_count = 0;
    for (int k = -6; k <= 6; ++k) {
      const double factor = std::ldexp(1.0, k);
      const std::size_t n = detail::count_in_range(contour, factor, range);
      const bool closer = std::abs(std::log2(factor)) <
                          std::abs(std::log2(best_factor));
      if (n > best_count || (n == best_count && closer)) {
        best_count = n;
        best_factor = factor;
      }
    }
  } else {
    // Each voiced frame is in range for factor in [low/f, high/f]; sweep the
    // interval endpoints for the max-coverage point.
    struct Event {
      double x;
      int delta;
    };
    std::vector<Event> events;
    events.reserve(2 * voiced_f0.size());
    for (double f : voiced_f0) {
      events.push_back({range.low / f, +1});
      events.push_back({range.high / f, -1});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      if (a.x != b.x) return a.x < b.x;
      return a.delta > b.delta;  // open before close at the same point
    });
    int cover = 0, best_cover = -1;
    std::vector<std::pair<double, double>> best_intervals;
    for (std::size_t i = 0; i < events.size(); ++i) {
      cover += events[i].delta;
      if (i + 1 < events.size() && events[i + 1].x > events[i].x) {
        if (cover > best_cover) {
          best_cover = cover;
          best_intervals.clear();
        }
        if (cover == best_cover)
          best_intervals.emplace_back(events[i].x, events[i + 1].x);
      }
    }
    best_factor = std::numeric_limits<double>::infinity();
    for (auto [lo, hi] : best_intervals) {
      const double candidate = (lo <= 1.0 && 1.0 <= hi)
                                   ? 1.0
                                   : (std::abs(lo - 1.0) < std::abs(hi - 1.0)
                                          ? lo
                                          : hi);
      if (std::abs(candidate - 1.0) < std::abs(best_factor - 1.0))
        best_factor = candidate;
    }
    if (!std::isfinite(best_factor)) best_factor = 1.0;
  }

  ScaledContour out;
  out.factor = best_factor;
  out.contour = contour;
  for (std::size_t i = 0; i < out.contour.frames(); ++i)
    if (out.contour.voiced[i])
      out.contour.f0[i] = static_cast<float>(out.contour.f0[i] * best_factor);
  return out;
}

inline PitchContour zero_contour(std::size_t num_frames) {
  if (num_frames < 1)
    throw ValidationError("zero_contour: need at least one frame");
  PitchContour c;
  c.f0.assign(num_frames, 0.0f);
  c.voiced.assign(num_frames, 0);
  return c;
}

}  // namespace melcond
