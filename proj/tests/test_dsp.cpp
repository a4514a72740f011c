#include <doctest.h>

#include <complex>
#include <numbers>

#include "helpers.hpp"
#include "melcond/melcond.hpp"

using namespace melcond;

namespace {

// O(n^2) DFT magnitude oracle for a single frame.
std::vector<double> dft_magnitude_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * k * j / n;
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

}  // namespace

TEST_CASE("frame_count arithmetic") {
  AudioClock clock;
  CHECK(frame_count(0, clock) == 1);
  CHECK(frame_count(22050, clock) == 87);
  CHECK(frame_count(256, clock) == 2);
  CHECK(frame_count(255, clock) == 1);
}

TEST_CASE("stft of silence is all zero with shape 513 x 87") {
  AudioClock clock;
  MonoSignal silence;
  silence.samples.assign(22050, 0.0f);
  const Spectrogram spec = stft_magnitude(silence, clock);
  CHECK(spec.bins == 513);
  CHECK(spec.frames == 87);
  for (float v : spec.values) CHECK(v == 0.0f);
}

TEST_CASE("stft rejects empty signals") {
  CHECK_THROWS_AS(stft_magnitude(MonoSignal{}, AudioClock{}), ValidationError);
}

TEST_CASE("440 Hz sine peaks at bin 20 on interior frames") {
  AudioClock clock;
  const auto sig = testutil::sine(440.0, 1.0, 1.0);
  const Spectrogram spec = stft_magnitude(sig, clock);
  const std::size_t expected_bin = 20;  // round(440 * 1024 / 22050)
  for (std::size_t f = 5; f + 5 < spec.frames; ++f) {
    std::size_t argmax = 0;
    for (std::size_t b = 1; b < spec.bins; ++b)
      if (spec.at(b, f) > spec.at(argmax, f)) argmax = b;
    CHECK(argmax == expected_bin);
  }
}

TEST_CASE("fft frame matches a direct DFT") {
  AudioClock clock;
  const auto sig = testutil::sine(440.0, 1.0, 1.0);
  const Spectrogram spec = stft_magnitude(sig, clock);

  // rebuild frame 40 by hand: reflect pad, window, direct DFT
  const std::size_t pad = clock.fft_size / 2;
  const auto padded = detail::reflect_pad(sig.samples, pad);
  const auto window = detail::hann_window(clock.window_size);
  std::vector<double> frame(clock.fft_size);
  const std::size_t f = 40;
  for (std::size_t i = 0; i < clock.window_size; ++i)
    frame[i] = padded[f * clock.hop + i] * window[i];
  const auto oracle = dft_magnitude_oracle(frame);
  double peak = 0.0;
  for (double v : oracle) peak = std::max(peak, v);
  for (std::size_t b = 0; b < spec.bins; ++b)
    CHECK(std::abs(spec.at(b, f) - oracle[b]) <= 1e-5 * peak + 1e-6);
}

TEST_CASE("mel filterbank shape and structure") {
  AudioClock clock;
  const auto fb = mel_filterbank(clock);
  const std::size_t bins = clock.fft_size / 2 + 1;
  REQUIRE(fb.size() == 80 * bins);
  for (float v : fb) CHECK(v >= 0.0f);

  // every filter row has at least one nonzero entry
  for (std::size_t m = 0; m < 80; ++m) {
    bool nonzero = false;
    for (std::size_t b = 0; b < bins; ++b)
      if (fb[m * bins + b] > 0.0f) nonzero = true;
    CHECK(nonzero);
  }

  // centers strictly increasing, recomputed from the scale formulas
  const auto centers = mel_band_centers(clock);
  for (std::size_t m = 1; m < centers.size(); ++m)
    CHECK(centers[m] > centers[m - 1]);
  // independent check of the first log-region center spacing
  const double mel_max = detail::hz_to_mel(clock.sample_rate / 2.0);
  for (std::size_t m = 0; m < centers.size(); ++m)
    CHECK(detail::hz_to_mel(centers[m]) ==
          doctest::Approx(mel_max * (m + 1) / 81.0).epsilon(1e-9));
}

TEST_CASE("mel spectrogram of silence") {
  AudioClock clock;
  MonoSignal silence;
  silence.samples.assign(22050, 0.0f);

  const auto lin =
      mel_spectrogram(silence, clock, MelSpectrogram::Scale::linear_power);
  CHECK(lin.frames == 87);
  for (float v : lin.values) CHECK(v == 0.0f);

  const auto log =
      mel_spectrogram(silence, clock, MelSpectrogram::Scale::log_compressed);
  const float floor_val = std::log(1e-5f);
  for (float v : log.values) CHECK(v == doctest::Approx(floor_val));
}

TEST_CASE("440 Hz sine lands in the mel band nearest 440 Hz") {
  AudioClock clock;
  const auto sig = testutil::sine(440.0, 1.0, 1.0);
  const auto mel =
      mel_spectrogram(sig, clock, MelSpectrogram::Scale::linear_power);
  const auto centers = mel_band_centers(clock);
  std::size_t nearest = 0;
  for (std::size_t m = 1; m < centers.size(); ++m)
    if (std::abs(centers[m] - 440.0) < std::abs(centers[nearest] - 440.0))
      nearest = m;
  for (std::size_t f = 5; f + 5 < mel.frames; ++f) {
    std::size_t argmax = 0;
    for (std::size_t m = 1; m < 80; ++m)
      if (mel.at(m, f) > mel.at(argmax, f)) argmax = m;
    CHECK(argmax == nearest);
  }
}

TEST_CASE("doubling amplitude quadruples linear-power mel values") {
  AudioClock clock;
  const auto a = testutil::sine(330.0, 0.4, 0.25);
  auto b = a;
  for (auto& v : b.samples) v *= 2.0f;
  const auto mel_a =
      mel_spectrogram(a, clock, MelSpectrogram::Scale::linear_power);
  const auto mel_b =
      mel_spectrogram(b, clock, MelSpectrogram::Scale::linear_power);
  REQUIRE(mel_a.values.size() == mel_b.values.size());
  for (std::size_t i = 0; i < mel_a.values.size(); ++i) {
    if (mel_a.values[i] < 1e-12f) continue;
    CHECK(mel_b.values[i] / mel_a.values[i] ==
          doctest::Approx(4.0).epsilon(1e-6));
  }
}

TEST_CASE("shape law holds for odd lengths") {
  AudioClock clock;
  for (std::size_t n : {1u, 100u, 4095u, 10000u}) {
    MonoSignal s;
    s.samples.assign(n, 0.1f);
    const auto mel = mel_spectrogram(s, clock);
    CHECK(mel.frames == frame_count(n, clock));
  }
}
