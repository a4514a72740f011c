#include <doctest.h>

#include "helpers.hpp"
#include "melcond/melcond.hpp"

using namespace melcond;

namespace {

ConditioningBundle vowel_note_bundle(double hz, double seconds) {
  AudioClock clock;
  ConditioningBundle b;
  b.clock = clock;
  b.phonemes.tokens = {"AA1"};
  const std::size_t frames = duration_to_frames(seconds, clock);
  b.contour.f0.assign(frames, static_cast<float>(hz));
  b.contour.voiced.assign(frames, 1);
  b.alignment = AlignmentMap::make_hard(
      std::vector<std::uint32_t>(frames, 0), 1);
  return b;
}

}  // namespace

TEST_CASE("silent bundle renders silence") {
  AudioClock clock;
  ConditioningBundle b;
  b.clock = clock;
  b.phonemes.tokens = {"SIL"};
  b.contour = zero_contour(40);
  b.alignment = AlignmentMap::make_hard(std::vector<std::uint32_t>(40, 0), 1);
  const auto sig = render_voice(b);
  CHECK(sig.samples.size() == 40 * clock.hop);
  for (float v : sig.samples) CHECK(v == 0.0f);
}

TEST_CASE("rendered vowel loops back through Yin") {
  const auto b = vowel_note_bundle(440.0, 4.0);
  const auto sig = render_voice(b);
  CHECK(sig.samples.size() == b.contour.frames() * b.clock.hop);

  auto c = extract_contour(sig, YinConfig{}, b.clock);
  // analysis of F*hop samples yields F+1 frames; drop the trailing frame
  REQUIRE(c.frames() == b.contour.frames() + 1);
  c.f0.resize(b.contour.frames());
  c.voiced.resize(b.contour.frames());
  std::size_t interior = 0, good = 0;
  for (std::size_t f = 3; f + 3 < c.frames(); ++f) {
    ++interior;
    if (c.voiced[f] && std::abs(c.f0[f] - 440.0f) <= 4.4f) ++good;
  }
  CHECK(good >= interior * 95 / 100);
}

TEST_CASE("render is deterministic for a fixed seed") {
  const auto b = vowel_note_bundle(330.0, 0.5);
  RenderConfig cfg;
  cfg.seed = 777;
  const auto a = render_voice(b, cfg);
  const auto c = render_voice(b, cfg);
  CHECK(a.samples == c.samples);

  RenderConfig other = cfg;
  other.seed = 778;
  // same pure tone: noise path unused, so seeds must not matter here
  const auto d = render_voice(b, other);
  CHECK(a.samples == d.samples);
}

TEST_CASE("highest emitted harmonic stays below Nyquist") {
  // 900 Hz fundamental: k_max = floor(0.45 * 22050 / 900) = 11
  const auto b = vowel_note_bundle(900.0, 0.5);
  const auto sig = render_voice(b);
  const AudioClock clock;
  const auto spec = stft_magnitude(sig, clock);
  // the top harmonic sits at 11 * 900 = 9900 Hz; everything well above it
  // (and below Nyquist) must be leakage-level only
  double above = 0.0, peak = 0.0;
  for (std::size_t f = 4; f + 4 < spec.frames; ++f) {
    for (std::size_t bn = 0; bn < spec.bins; ++bn) {
      const double v = spec.at(bn, f);
      peak = std::max(peak, v);
      const double freq = bn * double(clock.sample_rate) / clock.fft_size;
      if (freq > 10200.0) above = std::max(above, v);
    }
  }
  CHECK(above < 0.02 * peak);
}

TEST_CASE("peak normalization hits -1 dBFS") {
  const auto b = vowel_note_bundle(220.0, 1.0);
  const auto sig = render_voice(b);
  float peak = 0.0f;
  for (float v : sig.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(std::pow(10.0, -1.0 / 20.0)).epsilon(1e-4));
}

TEST_CASE("consonant coloration renders unvoiced noise") {
  AudioClock clock;
  const Lexicon lex = testutil::test_lexicon();
  ScorePart part;
  ScoreEvent ev;
  ev.kind = ScoreEvent::Kind::note;
  ev.midi = 57;
  ev.duration_sec = 1.0;
  ev.syllable = Syllable{"Bass", Syllabic::single};
  part.events.push_back(ev);
  const auto b = compile_part(part, lex, clock);
  const auto sig = render_voice(b);
  CHECK(sig.samples.size() == 86 * clock.hop);
  // the fricative tail must contain energy (sustained noise)
  double tail = 0.0;
  for (std::size_t n = sig.samples.size() - 4 * clock.hop;
       n < sig.samples.size() - clock.hop; ++n)
    tail += std::abs(sig.samples[n]);
  CHECK(tail > 0.0);
}

TEST_CASE("choir of one equals the single voice") {
  const auto b = vowel_note_bundle(440.0, 0.5);
  RenderConfig cfg;
  const auto solo = render_voice(b, cfg);
  const auto choir = render_choir({b}, cfg, 0.0, 0.0);
  REQUIRE(choir.samples.size() == solo.samples.size());
  for (std::size_t i = 0; i < solo.samples.size(); ++i)
    CHECK(std::abs(choir.samples[i] - solo.samples[i]) <= 1e-6f);
}

TEST_CASE("two identical voices mix back to one after normalization") {
  const auto b = vowel_note_bundle(440.0, 0.5);
  RenderConfig cfg;
  const auto solo = render_voice(b, cfg);
  const auto duo = render_choir({b, b}, cfg, 0.0, 0.0);
  for (std::size_t i = 0; i < solo.samples.size(); ++i)
    CHECK(std::abs(duo.samples[i] - solo.samples[i]) <= 1e-6f);
}

TEST_CASE("choir rejects mismatched frame counts") {
  const auto a = vowel_note_bundle(440.0, 0.5);
  const auto b = vowel_note_bundle(440.0, 0.6);
  CHECK_THROWS_AS(render_choir({a, b}), ValidationError);
}

TEST_CASE("choir renders are deterministic") {
  const auto a = vowel_note_bundle(440.0, 0.3);
  const auto b = vowel_note_bundle(550.0, 0.3);
  RenderConfig cfg;
  cfg.seed = 1234;
  const auto m1 = render_choir({a, b}, cfg, 8.0, 10.0);
  const auto m2 = render_choir({a, b}, cfg, 8.0, 10.0);
  CHECK(m1.samples == m2.samples);
}
