#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "melcond/melcond.hpp"

namespace testutil {

inline melcond::MonoSignal sine(double freq_hz, double seconds,
                                double amplitude = 0.5,
                                std::uint32_t sample_rate = 22050) {
  melcond::MonoSignal s;
  s.sample_rate = sample_rate;
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / sample_rate));
  return s;
}

inline melcond::MonoSignal sawtooth(double freq_hz, double seconds,
                                    double amplitude = 0.5,
                                    std::uint32_t sample_rate = 22050) {
  melcond::MonoSignal s;
  s.sample_rate = sample_rate;
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = freq_hz * i / sample_rate;
    s.samples[i] = static_cast<float>(amplitude * (2.0 * (t - std::floor(t + 0.5))));
  }
  return s;
}

// Brute-force autocorrelation peak-picking oracle, independent of the CMND
// path in the library.
inline double autocorr_f0_oracle(const std::vector<float>& window,
                                 double sample_rate, double f_min,
                                 double f_max) {
  const std::size_t half = window.size() / 2;
  const std::size_t tau_min =
      static_cast<std::size_t>(std::floor(sample_rate / f_max));
  const std::size_t tau_max = std::min(
      static_cast<std::size_t>(std::ceil(sample_rate / f_min)), half - 1);
  std::size_t best_tau = tau_min;
  double best_r = -1e300;
  std::vector<double> r(tau_max + 2, 0.0);
  for (std::size_t tau = tau_min > 1 ? tau_min - 1 : 1; tau <= tau_max + 1 && tau < half;
       ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < half; ++j)
      acc += static_cast<double>(window[j]) * window[j + tau];
    r[tau] = acc;
  }
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau)
    best_r = std::max(best_r, r[tau]);
  // all period multiples peak at nearly the same height; take the smallest
  // lag that is a local maximum within 1% of the global one
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
    if (r[tau] >= 0.99 * best_r && r[tau] >= r[tau - 1] &&
        r[tau] >= r[tau + 1]) {
      best_tau = tau;
      break;
    }
  }
  // parabolic refinement on the autocorrelation peak
  double tau_ref = static_cast<double>(best_tau);
  if (best_tau > tau_min && best_tau < tau_max) {
    const double a = r[best_tau - 1], b = r[best_tau], c = r[best_tau + 1];
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-12) tau_ref += 0.5 * (a - c) / denom;
  }
  return sample_rate / tau_ref;
}

// Random but always-valid bundle for round-trip and metric identity tests.
inline melcond::ConditioningBundle random_bundle(std::mt19937& rng) {
  using namespace melcond;
  std::uniform_int_distribution<std::size_t> frames_dist(1, 120);
  std::uniform_int_distribution<std::size_t> tokens_dist(1, 12);
  std::uniform_real_distribution<float> f0_dist(60.0f, 900.0f);
  std::uniform_int_distribution<int> coin(0, 1);

  ConditioningBundle b;
  const std::size_t frames = frames_dist(rng);
  const std::size_t tokens = tokens_dist(rng);
  const std::vector<std::string> pool = {"AA1", "B",  "S",  "IY0", "SIL",
                                         "NG",  "EH2", "R", "T",   "UW1"};
  for (std::size_t t = 0; t < tokens; ++t)
    b.phonemes.tokens.push_back(pool[rng() % pool.size()]);
  for (std::size_t f = 0; f < frames; ++f) {
    const bool voiced = coin(rng) == 1;
    b.contour.voiced.push_back(voiced ? 1 : 0);
    b.contour.f0.push_back(voiced ? f0_dist(rng) : 0.0f);
  }
  if (coin(rng) == 1) {
    std::vector<std::uint32_t> idx(frames);
    std::size_t tok = 0;
    for (std::size_t f = 0; f < frames; ++f) {
      if (tok + 1 < tokens && coin(rng) == 1) ++tok;  // monotone path
      idx[f] = static_cast<std::uint32_t>(tok);
    }
    b.alignment = AlignmentMap::make_hard(std::move(idx), tokens);
  } else {
    std::vector<float> w(tokens * frames, 0.0f);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (std::size_t f = 0; f < frames; ++f) {
      double sum = 0.0;
      std::vector<double> col(tokens);
      for (std::size_t t = 0; t < tokens; ++t) sum += col[t] = u(rng);
      double acc = 0.0;
      for (std::size_t t = 0; t < tokens; ++t) {
        // float column that sums to 1 exactly enough for the 1e-6 gate
        col[t] /= sum;
        acc += col[t];
      }
      col[tokens - 1] += 1.0 - acc;
      for (std::size_t t = 0; t < tokens; ++t)
        w[t * frames + f] = static_cast<float>(col[t]);
    }
    b.alignment = AlignmentMap::make_soft(tokens, frames, std::move(w));
  }
  b.speaker_id = static_cast<std::uint32_t>(rng() % 1000);
  if (coin(rng) == 1) b.gst_id = static_cast<std::uint32_t>(rng() % 32);
  return b;
}

inline melcond::Lexicon test_lexicon() {
  melcond::Lexicon lex;
  lex.add("hello", {"HH", "AH0", "L", "OW1"});
  lex.add("world", {"W", "ER1", "L", "D"});
  lex.add("bass", {"B", "AE1", "S"});
  lex.add("ah", {"AA1"});
  lex.add("la", {"L", "AA1"});
  lex.add("don't", {"D", "OW1", "N", "T"});
  lex.add("stop", {"S", "T", "AA1", "P"});
  return lex;
}

}  // namespace testutil
