#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "melcond/text.hpp"
#include "melcond/types.hpp"

namespace melcond {

struct PhoneInterval {
  std::string phone;
  double start_sec = 0.0;
  double end_sec = 0.0;
};

inline void check_intervals(const std::vector<PhoneInterval>& intervals) {
  double prev_end = 0.0;
  for (const auto& iv : intervals) {
    if (!(iv.start_sec >= 0.0 && iv.start_sec < iv.end_sec))
      throw ValidationError("PhoneInterval: need 0 <= start < end for '" +
                            iv.phone + "'");
    if (iv.start_sec < prev_end)
      throw ValidationError("PhoneInterval: intervals overlap at '" +
                            iv.phone + "'");
    prev_end = iv.end_sec;
  }
}

// TSV: phone<TAB>start_sec<TAB>end_sec
inline std::vector<PhoneInterval> load_intervals(std::istream& in) {
  std::vector<PhoneInterval> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    PhoneInterval iv;
    if (!(std::getline(ss, iv.phone, '\t') && ss >> iv.start_sec >> iv.end_sec))
      throw ParseError("bad interval line: " + line);
    out.push_back(iv);
  }
  check_intervals(out);
  return out;
}

// round(seconds * sample_rate / hop), ties-to-even.
inline std::size_t duration_to_frames(double seconds, const AudioClock& clock) {
  if (seconds < 0.0)
    throw ValidationError("duration_to_frames: negative duration");
  const double frames = seconds * clock.sample_rate / clock.hop;
  const double nearest = std::nearbyint(frames);  // default FE_TONEAREST
  return static_cast<std::size_t>(nearest);
}

// Hard map: column f is one-hot on the token whose interval contains the
// frame-center time (f + 0.5) * hop / sample_rate. Gaps in the interval list
// map to silence tokens present in the phoneme sequence.
inline AlignmentMap alignment_from_intervals(
    const std::vector<PhoneInterval>& intervals,
    const PhonemeSequence& phonemes, std::size_t total_frames,
    const AudioClock& clock) {
  check_intervals(intervals);
  const double total_sec =
      static_cast<double>(total_frames) * clock.hop / clock.sample_rate;
  if (!intervals.empty() && intervals.back().end_sec > total_sec + 1e-9)
    throw ValidationError("alignment_from_intervals: intervals exceed total "
                          "duration");

  // Build a contiguous (token, t_start, t_end) cover of [0, total_sec].
  struct Span {
    std::size_t token;
    double t0, t1;
  };
  std::vector<Span> spans;
  std::size_t iv = 0;
  double t = 0.0;
  for (std::size_t tok = 0; tok < phonemes.size(); ++tok) {
    const std::string& phone = phonemes.tokens[tok];
    if (is_silence(phone)) {
      const double end =
          iv < intervals.size() ? intervals[iv].start_sec : total_sec;
      spans.push_back({tok, t, std::max(t, end)});
      t = std::max(t, end);
    } else {
      if (iv >= intervals.size())
        throw ValidationError(
            "alignment_from_intervals: more phones than intervals");
      if (intervals[iv].phone != phone)
        throw ValidationError("alignment_from_intervals: phone mismatch at "
                              "token " + std::to_string(tok) + ": expected '" +
                              phone + "', interval has '" +
                              intervals[iv].phone + "'");
      if (intervals[iv].start_sec > t + 1e-9 &&
          (spans.empty() || !is_silence(phonemes.tokens[spans.back().token])))
        throw ValidationError("alignment_from_intervals: gap before '" + phone +
                              "' has no silence token");
      spans.push_back({tok, t, intervals[iv].end_sec});
      t = intervals[iv].end_sec;
      ++iv;
    }
  }
  if (iv < intervals.size())
    throw ValidationError("alignment_from_intervals: more intervals than "
                          "phones");
  if (!spans.empty()) spans.back().t1 = std::max(spans.back().t1, total_sec);

  std::vector<std::uint32_t> frame_tokens(total_frames, 0);
  std::size_t s = 0;
  for (std::size_t f = 0; f < total_frames; ++f) {
    const double center = (static_cast<double>(f) + 0.5) * clock.hop /
                          clock.sample_rate;
    while (s + 1 < spans.size() &&
           (center >= spans[s].t1 || spans[s].t1 <= spans[s].t0))
      ++s;
    frame_tokens[f] = static_cast<std::uint32_t>(spans[s].token);
  }
  return AlignmentMap::make_hard(std::move(frame_tokens), phonemes.size());
}

// Token t occupies the next frame_durations[t] columns.
inline AlignmentMap alignment_from_durations(
    const std::vector<std::size_t>& frame_durations) {
  const std::size_t total =
      std::accumulate(frame_durations.begin(), frame_durations.end(),
                      std::size_t{0});
  if (total == 0)
    throw ValidationError("alignment_from_durations: all durations zero");
  std::vector<std::uint32_t> frame_tokens;
  frame_tokens.reserve(total);
  for (std::size_t t = 0; t < frame_durations.size(); ++t)
    frame_tokens.insert(frame_tokens.end(), frame_durations[t],
                        static_cast<std::uint32_t>(t));
  return AlignmentMap::make_hard(std::move(frame_tokens),
                                 frame_durations.size());
}

// Piecewise-linear rate over normalized source position in [0, 1].
struct RateCurve {
  std::vector<std::pair<double, double>> breakpoints;  // (position, rate)

  void check() const {
    if (breakpoints.size() < 1)
      throw ValidationError("RateCurve: need at least one breakpoint");
    if (breakpoints.front().first != 0.0 || breakpoints.back().first != 1.0)
      throw ValidationError("RateCurve: positions must start at 0 and end at 1");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (breakpoints[i].second <= 0.0)
        throw ValidationError("RateCurve: rates must be positive");
      if (i > 0 && breakpoints[i].first <= breakpoints[i - 1].first)
        throw ValidationError("RateCurve: positions must be strictly "
                              "increasing");
    }
  }

  double rate(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
      if (u <= breakpoints[i].first) {
        const auto& [x0, r0] = breakpoints[i - 1];
        const auto& [x1, r1] = breakpoints[i];
        const double w = (u - x0) / (x1 - x0);
        return r0 + w * (r1 - r0);
      }
    }
    return breakpoints.back().second;
  }

  static RateCurve constant(double r) { return {{{0.0, r}, {1.0, r}}}; }

  // "0:0.5,0.5:1.0,1:2.0"
  static RateCurve parse(const std::string& text) {
    RateCurve c;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ParseError("rate curve entry missing ':': " + item);
      c.breakpoints.emplace_back(std::stod(item.substr(0, colon)),
                                 std::stod(item.substr(colon + 1)));
    }
    if (c.breakpoints.size() == 1)
      c.breakpoints.emplace_back(1.0, c.breakpoints[0].second);
    c.check();
    return c;
  }
};

namespace detail {

// Cumulative output time at the start of each source frame:
// c[0] = 0, c[f+1] = c[f] + 1/rate(f/F).
inline std::vector<double> warp_cumulative(std::size_t frames,
                                           const RateCurve& curve) {
  std::vector<double> c(frames + 1, 0.0);
  for (std::size_t f = 0; f < frames; ++f)
    c[f + 1] = c[f] + 1.0 / curve.rate(static_cast<double>(f) / frames);
  return c;
}

// Invert the cumulative array: continuous source position s with c(s) == t.
inline double warp_invert(const std::vector<double>& c, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= c.back()) return static_cast<double>(c.size() - 1);
  auto it = std::upper_bound(c.begin(), c.end(), t);
  const std::size_t f = static_cast<std::size_t>(it - c.begin()) - 1;
  const double seg = c[f + 1] - c[f];
  return static_cast<double>(f) + (seg > 0.0 ? (t - c[f]) / seg : 0.0);
}

}  // namespace detail

// Resamples the map along time under the rate curve. Hard inputs may become
// soft at interpolation boundaries.
inline AlignmentMap warp_alignment(const AlignmentMap& map,
                                   const RateCurve& curve) {
  curve.check();
  const std::size_t F = map.frames();
  if (F < 2)
    throw ValidationError("warp_alignment: need at least two frames");
  const auto cum = detail::warp_cumulative(F, curve);
  const std::size_t Fp =
      static_cast<std::size_t>(std::llround(cum.back()));
  if (Fp == 0) throw ValidationError("warp_alignment: warp collapses all frames");

  const std::size_t T = map.tokens();
  std::vector<float> out(T * Fp, 0.0f);
  for (std::size_t fp = 0; fp < Fp; ++fp) {
    const double s = detail::warp_invert(cum, static_cast<double>(fp));
    std::size_t f0 = static_cast<std::size_t>(s);
    if (f0 >= F) f0 = F - 1;
    const double w = std::min(s - static_cast<double>(f0), 1.0);
    const std::size_t f1 = std::min(f0 + 1, F - 1);
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double v =
          (1.0 - w) * map.weight(t, f0) + w * map.weight(t, f1);
      out[t * Fp + fp] = static_cast<float>(v);
      sum += v;
    }
    if (sum > 0.0) {
      for (std::size_t t = 0; t < T; ++t)
        out[t * Fp + fp] = static_cast<float>(out[t * Fp + fp] / sum);
    }
  }
  return AlignmentMap::make_soft(T, Fp, std::move(out));
}

// Resamples a pitch contour under the same warp: nearest source frame for f0
// (restricted to voiced frames), logical-OR of voiced over the covered span.
inline PitchContour warp_contour(const PitchContour& contour,
                                 const RateCurve& curve,
                                 std::size_t out_frames) {
  const std::size_t F = contour.frames();
  if (F < 2) throw ValidationError("warp_contour: need at least two frames");
  curve.check();
  const auto cum = detail::warp_cumulative(F, curve);

  PitchContour out;
  out.f0.assign(out_frames, 0.0f);
  out.voiced.assign(out_frames, 0);
  for (std::size_t fp = 0; fp < out_frames; ++fp) {
    const double s0 = detail::warp_invert(cum, static_cast<double>(fp));
    const double s1 = detail::warp_invert(cum, static_cast<double>(fp) + 1.0);
    std::size_t lo = std::min(static_cast<std::size_t>(s0), F - 1);
    std::size_t hi = std::min(
        static_cast<std::size_t>(std::max(std::ceil(s1), s0 + 1.0)), F);
    bool voiced = false;
    for (std::size_t f = lo; f < hi; ++f)
      if (contour.voiced[f]) voiced = true;
    if (voiced) {
      const double center = 0.5 * (s0 + s1);
      std::size_t best = lo;
      double best_dist = 1e300;
      for (std::size_t f = lo; f < hi; ++f) {
        if (!contour.voiced[f]) continue;
        const double d = std::abs(static_cast<double>(f) + 0.5 - center);
        if (d < best_dist) {
          best_dist = d;
          best = f;
        }
      }
      out.f0[fp] = contour.f0[best];
      out.voiced[fp] = 1;
    }
  }
  return out;
}

}  // namespace melcond
