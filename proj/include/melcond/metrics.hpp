#pragma once

#include <cmath>
#include <cstddef>

#include "melcond/pitch.hpp"
#include "melcond/types.hpp"

namespace melcond {

struct MetricReport {
  double gpe = 0.0;
  double vde = 0.0;
  double ffe = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_both_voiced = 0;
};

// GPE / VDE / FFE between a reference and an estimated contour. The gross
// threshold is relative to the reference f0, so GPE and FFE are not
// symmetric; VDE is.
inline MetricReport compare_contours(const PitchContour& reference,
                                     const PitchContour& estimate,
                                     double gross_threshold = 0.2) {
  if (reference.frames() != estimate.frames())
    throw ValidationError("compare_contours: contour lengths differ");
  if (reference.frames() == 0)
    throw ValidationError("compare_contours: empty contours");

  const std::size_t n = reference.frames();
  std::size_t vde_count = 0, both_voiced = 0, gross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool rv = reference.voiced[i] != 0;
    const bool ev = estimate.voiced[i] != 0;
    if (rv != ev) {
      ++vde_count;
    } else if (rv && ev) {
      ++both_voiced;
      if (std::abs(estimate.f0[i] - reference.f0[i]) >
          gross_threshold * reference.f0[i])
        ++gross;
    }
  }

  MetricReport r;
  r.n_frames = n;
  r.n_both_voiced = both_voiced;
  r.vde = static_cast<double>(vde_count) / n;
  r.gpe = both_voiced > 0 ? static_cast<double>(gross) / both_voiced : 0.0;
  r.ffe = static_cast<double>(vde_count + gross) / n;
  return r;
}

// Extracts both contours with the same Yin configuration and compares them.
inline MetricReport evaluate_pair(const MonoSignal& reference,
                                  const MonoSignal& estimate,
                                  const YinConfig& config,
                                  const AudioClock& clock,
                                  double gross_threshold = 0.2) {
  if (reference.sample_rate != estimate.sample_rate)
    throw ValidationError("evaluate_pair: sample rates differ");
  if (reference.samples.size() != estimate.samples.size())
    throw ValidationError("evaluate_pair: sample counts differ");
  const PitchContour ref = extract_contour(reference, config, clock);
  const PitchContour est = extract_contour(estimate, config, clock);
  return compare_contours(ref, est, gross_threshold);
}

}  // namespace melcond
