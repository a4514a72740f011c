#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "melcond/types.hpp"

namespace melcond {

// Centered framing: 1 + floor(N / hop) frames, matching reflect padding of
// fft_size/2 on each side.
inline std::size_t frame_count(std::size_t num_samples,
                               const AudioClock& clock) {
  return 1 + num_samples / clock.hop;
}

namespace detail {

// Mirror an out-of-range index without repeating the edge sample
// (indices ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...).
inline std::size_t reflect_index(long long i, std::size_t n) {
  if (n <= 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

// Reflect-pad by `pad` samples on each side (abcd -> cb|abcd|cb).
inline std::vector<float> reflect_pad(const std::vector<float>& x,
                                      std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<float> out;
  out.reserve(n + 2 * pad);
  for (long long i = -static_cast<long long>(pad);
       i < static_cast<long long>(n + pad); ++i)
    out.push_back(x[reflect_index(i, n)]);
  return out;
}

// Iterative radix-2 FFT; falls back to a direct DFT for non power-of-two
// sizes.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0) return;
  if ((n & (n - 1)) != 0) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double ang = -2.0 * std::numbers::pi * k * j / n;
        s += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = s;
    }
    a = std::move(out);
    return;
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w = 1.0;
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = a[i + j];
        auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

}  // namespace detail

// Magnitude STFT, shape (fft_size/2+1) x frames, row-major.
struct Spectrogram {
  std::vector<float> values;
  std::size_t bins = 0;
  std::size_t frames = 0;

  float at(std::size_t bin, std::size_t frame) const {
    return values[bin * frames + frame];
  }
};

inline Spectrogram stft_magnitude(const MonoSignal& signal,
                                  const AudioClock& clock) {
  clock.check();
  if (signal.samples.empty())
    throw ValidationError("stft_magnitude: empty signal");
  if (signal.sample_rate != clock.sample_rate)
    throw ValidationError("stft_magnitude: signal/clock sample rate mismatch");

  const std::size_t pad = clock.fft_size / 2;
  const std::vector<float> padded = detail::reflect_pad(signal.samples, pad);
  const std::size_t n_frames = frame_count(signal.samples.size(), clock);
  const std::size_t bins = clock.fft_size / 2 + 1;
  const auto window = detail::hann_window(clock.window_size);
  // window centered inside the FFT buffer when shorter than fft_size
  const std::size_t win_off = (clock.fft_size - clock.window_size) / 2;

  Spectrogram spec;
  spec.bins = bins;
  spec.frames = n_frames;
  spec.values.assign(bins * n_frames, 0.0f);

  std::vector<std::complex<double>> buf(clock.fft_size);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t start = f * clock.hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0));
    for (std::size_t i = 0; i < clock.window_size; ++i)
      buf[win_off + i] = padded[start + win_off + i] * window[i];
    detail::fft_inplace(buf);
    for (std::size_t b = 0; b < bins; ++b)
      spec.values[b * n_frames + f] = static_cast<float>(std::abs(buf[b]));
  }
  return spec;
}

// 80 triangular Slaney-scale filters, f_min = 0, f_max = sr/2,
// area-normalized (2 / bandwidth). Row-major 80 x (fft_size/2+1).
inline std::vector<float> mel_filterbank(const AudioClock& clock) {
  clock.check();
  const std::size_t bins = clock.fft_size / 2 + 1;
  const std::size_t n_mels = MelSpectrogram::kBands;
  const double f_max = clock.sample_rate / 2.0;

  std::vector<double> mel_pts(n_mels + 2);
  const double mel_max = detail::hz_to_mel(f_max);
  for (std::size_t i = 0; i < mel_pts.size(); ++i)
    mel_pts[i] = detail::mel_to_hz(mel_max * i / (n_mels + 1));

  std::vector<float> fb(n_mels * bins, 0.0f);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = mel_pts[m], ctr = mel_pts[m + 1], hi = mel_pts[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (std::size_t b = 0; b < bins; ++b) {
      const double freq =
          static_cast<double>(b) * clock.sample_rate / clock.fft_size;
      double w = 0.0;
      if (freq >= lo && freq <= ctr && ctr > lo)
        w = (freq - lo) / (ctr - lo);
      else if (freq > ctr && freq <= hi && hi > ctr)
        w = (hi - freq) / (hi - ctr);
      fb[m * bins + b] = static_cast<float>(std::max(0.0, w * norm));
    }
  }
  return fb;
}

// Center frequency of each mel band (the apex of each triangle).
inline std::vector<double> mel_band_centers(const AudioClock& clock) {
  const std::size_t n_mels = MelSpectrogram::kBands;
  const double mel_max = detail::hz_to_mel(clock.sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m)
    centers[m] = detail::mel_to_hz(mel_max * (m + 1) / (n_mels + 1));
  return centers;
}

constexpr float kLogFloor = 1e-5f;

inline MelSpectrogram mel_spectrogram(
    const MonoSignal& signal, const AudioClock& clock,
    MelSpectrogram::Scale scale = MelSpectrogram::Scale::log_compressed) {
  const Spectrogram spec = stft_magnitude(signal, clock);
  const auto fb = mel_filterbank(clock);
  const std::size_t bins = spec.bins;

  MelSpectrogram mel;
  mel.frames = spec.frames;
  mel.scale = scale;
  mel.values.assign(MelSpectrogram::kBands * spec.frames, 0.0f);
  for (std::size_t m = 0; m < MelSpectrogram::kBands; ++m) {
    for (std::size_t f = 0; f < spec.frames; ++f) {
      double acc = 0.0;
      for (std::size_t b = 0; b < bins; ++b) {
        const float w = fb[m * bins + b];
        if (w == 0.0f) continue;
        const double mag = spec.values[b * spec.frames + f];
        acc += static_cast<double>(w) * mag * mag;
      }
      float v = static_cast<float>(acc);
      if (scale == MelSpectrogram::Scale::log_compressed)
        v = std::log(std::max(v, kLogFloor));
      mel.values[m * spec.frames + f] = v;
    }
  }
  return mel;
}

}  // namespace melcond
