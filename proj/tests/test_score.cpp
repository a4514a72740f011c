#include <doctest.h>

#include <numeric>
#include <set>

#include "helpers.hpp"
#include "melcond/melcond.hpp"

using namespace melcond;

namespace {

// Minimal score-partwise document builders.
std::string score_header() {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<!DOCTYPE score-partwise PUBLIC \"-//Recordare//DTD MusicXML 3.1 "
         "Partwise//EN\" \"http://www.musicxml.org/dtds/partwise.dtd\">\n";
}

std::string whole_note_a4_score() {
  return score_header() +
         "<score-partwise version=\"3.1\">"
         "<part-list><score-part id=\"P1\"><part-name>Voice</part-name>"
         "</score-part></part-list>"
         "<part id=\"P1\"><measure number=\"1\">"
         "<attributes><divisions>1</divisions>"
         "<time><beats>4</beats><beat-type>4</beat-type></time></attributes>"
         "<direction><sound tempo=\"60\"/></direction>"
         "<note><pitch><step>A</step><octave>4</octave></pitch>"
         "<duration>4</duration><type>whole</type>"
         "<lyric><syllabic>single</syllabic><text>ah</text></lyric></note>"
         "</measure></part></score-partwise>";
}

std::string tied_quarters_score() {
  return score_header() +
         "<score-partwise version=\"3.1\">"
         "<part-list><score-part id=\"P1\"><part-name>V</part-name>"
         "</score-part></part-list>"
         "<part id=\"P1\"><measure number=\"1\">"
         "<attributes><divisions>1</divisions></attributes>"
         "<direction><sound tempo=\"60\"/></direction>"
         "<note><pitch><step>C</step><octave>4</octave></pitch>"
         "<duration>1</duration><tie type=\"start\"/>"
         "<lyric><syllabic>single</syllabic><text>ah</text></lyric></note>"
         "<note><pitch><step>C</step><octave>4</octave></pitch>"
         "<duration>1</duration><tie type=\"stop\"/></note>"
         "</measure></part></score-partwise>";
}

std::string rest_measure_score() {
  return score_header() +
         "<score-partwise version=\"3.1\">"
         "<part-list><score-part id=\"P1\"><part-name>V</part-name>"
         "</score-part></part-list>"
         "<part id=\"P1\"><measure number=\"1\">"
         "<attributes><divisions>1</divisions></attributes>"
         "<direction><sound tempo=\"60\"/></direction>"
         "<note><rest/><duration>4</duration></note>"
         "</measure></part></score-partwise>";
}

}  // namespace

TEST_CASE("midi_to_hz") {
  CHECK(midi_to_hz(69) == doctest::Approx(440.0));
  CHECK(midi_to_hz(81) == doctest::Approx(880.0));
  CHECK(midi_to_hz(60) == doctest::Approx(261.6256).epsilon(1e-5));
  CHECK_THROWS_AS(midi_to_hz(-1), ValidationError);
  CHECK_THROWS_AS(midi_to_hz(128), ValidationError);
}

TEST_CASE("parse whole note A4 at 60 bpm") {
  const auto parts = parse_musicxml(whole_note_a4_score());
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].name == "Voice");
  REQUIRE(parts[0].events.size() == 1);
  const auto& ev = parts[0].events[0];
  CHECK(ev.kind == ScoreEvent::Kind::note);
  CHECK(*ev.midi == 69);
  CHECK(ev.duration_sec == doctest::Approx(4.0));
  REQUIRE(ev.syllable);
  CHECK(ev.syllable->text == "ah");
}

TEST_CASE("tied quarter notes merge into one event") {
  const auto parts = parse_musicxml(tied_quarters_score());
  REQUIRE(parts[0].events.size() == 1);
  const auto& ev = parts[0].events[0];
  CHECK(*ev.midi == 60);
  CHECK(ev.duration_sec == doctest::Approx(2.0));
}

TEST_CASE("rest measures become rest events") {
  const auto parts = parse_musicxml(rest_measure_score());
  REQUIRE(parts[0].events.size() == 1);
  CHECK(parts[0].events[0].kind == ScoreEvent::Kind::rest);
  CHECK(parts[0].events[0].duration_sec == doctest::Approx(4.0));
}

TEST_CASE("parser error paths") {
  CHECK_THROWS_AS(parse_musicxml("<broken"), ParseError);
  CHECK_THROWS_AS(parse_musicxml("<wrong-root/>"), ParseError);
  // note before divisions
  const std::string no_div =
      "<score-partwise><part-list><score-part id=\"P1\">"
      "<part-name>V</part-name></score-part></part-list>"
      "<part id=\"P1\"><measure number=\"1\">"
      "<note><pitch><step>C</step><octave>4</octave></pitch>"
      "<duration>1</duration></note></measure></part></score-partwise>";
  CHECK_THROWS_WITH_AS(parse_musicxml(no_div),
                       doctest::Contains("divisions"), ParseError);
}

TEST_CASE("assign_phone_durations: the one-second three-phone event") {
  AudioClock clock;
  const std::vector<std::string> phones = {"B", "AE1", "S"};
  const auto frames = assign_phone_durations(1.0, phones, clock);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0] == 2);   // 20 ms
  CHECK(frames[2] == 9);   // 100 ms
  CHECK(frames[1] == 75);  // remainder
  CHECK(std::accumulate(frames.begin(), frames.end(), std::size_t{0}) == 86);
}

TEST_CASE("single vowel takes the whole event") {
  AudioClock clock;
  const auto frames = assign_phone_durations(0.7, {"AA1"}, clock);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0] == duration_to_frames(0.7, clock));
}

TEST_CASE("short events clamp consonants to half the event") {
  AudioClock clock;
  const std::vector<std::string> phones = {"B", "AE1", "S"};
  const auto frames = assign_phone_durations(0.05, phones, clock);
  const std::size_t total = duration_to_frames(0.05, clock);
  CHECK(std::accumulate(frames.begin(), frames.end(), std::size_t{0}) == total);
  CHECK(frames[0] + frames[2] <= total / 2 + 1);
  CHECK(frames[1] >= 1);
  // an event shorter than one frame per vowel must fail
  CHECK_THROWS_AS(assign_phone_durations(0.004, phones, clock),
                  ValidationError);
}

TEST_CASE("frame conservation over many durations and phone sets") {
  AudioClock clock;
  const std::vector<std::vector<std::string>> sets = {
      {"B", "AE1", "S"},
      {"HH", "AH0", "L", "OW1"},
      {"S", "T", "AA1", "P"},
      {"AA1"},
      {"M", "AA1", "M"}};
  for (double dur : {0.1, 0.25, 0.5, 1.0, 2.0, 3.7}) {
    for (const auto& phones : sets) {
      const auto frames = assign_phone_durations(dur, phones, clock);
      CHECK(std::accumulate(frames.begin(), frames.end(), std::size_t{0}) ==
            duration_to_frames(dur, clock));
    }
  }
}

TEST_CASE("compile_part: whole note A4 on 'ah'") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  const auto parts = parse_musicxml(whole_note_a4_score());
  const auto b = compile_part(parts[0], lex, clock);
  CHECK(b.contour.frames() == 345);  // duration_to_frames(4.0)
  CHECK(b.phonemes.tokens == std::vector<std::string>{"AA1"});
  for (std::size_t f = 0; f < b.contour.frames(); ++f) {
    CHECK(b.contour.voiced[f]);
    CHECK(b.contour.f0[f] == doctest::Approx(440.0f));
  }
  CHECK(validate_bundle(b).empty());
}

TEST_CASE("compile_part: a one-second rest becomes 86 silent frames") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  ScorePart part;
  part.events.push_back({ScoreEvent::Kind::rest, std::nullopt, 1.0, {}});
  const auto b = compile_part(part, lex, clock);
  CHECK(b.contour.frames() == 86);
  CHECK(b.phonemes.tokens == std::vector<std::string>{"SIL"});
  for (std::size_t f = 0; f < 86; ++f) CHECK(!b.contour.voiced[f]);
}

TEST_CASE("compile_part: the Bass note") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  ScorePart part;
  ScoreEvent ev;
  ev.kind = ScoreEvent::Kind::note;
  ev.midi = 57;  // A3
  ev.duration_sec = 1.0;
  ev.syllable = Syllable{"Bass", Syllabic::single};
  part.events.push_back(ev);
  const auto b = compile_part(part, lex, clock);

  CHECK(b.phonemes.tokens == std::vector<std::string>{"B", "AE1", "S"});
  CHECK(b.contour.frames() == 86);
  const float a3 = static_cast<float>(midi_to_hz(57));
  std::size_t voiced_count = 0;
  for (std::size_t f = 0; f < b.contour.frames(); ++f) {
    const std::size_t tok = b.alignment.column_argmax(f);
    if (b.phonemes.tokens[tok] == "AE1") {
      CHECK(b.contour.voiced[f]);
      CHECK(b.contour.f0[f] == doctest::Approx(a3));
      ++voiced_count;
    } else {
      CHECK(!b.contour.voiced[f]);
    }
  }
  CHECK(voiced_count == 75);
  CHECK(validate_bundle(b).empty());
}

TEST_CASE("compile_part: melisma sustains the vowel across notes") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  ScorePart part;
  ScoreEvent first;
  first.kind = ScoreEvent::Kind::note;
  first.midi = 60;
  first.duration_sec = 1.0;
  first.syllable = Syllable{"Bass", Syllabic::single};
  ScoreEvent second;  // no lyric: continuation of the same syllable
  second.kind = ScoreEvent::Kind::note;
  second.midi = 64;
  second.duration_sec = 1.0;
  part.events = {first, second};

  const auto b = compile_part(part, lex, clock);
  CHECK(b.phonemes.tokens == std::vector<std::string>{"B", "AE1", "S"});
  CHECK(b.contour.frames() == 172);
  // the vowel token spans both notes; pitch changes at the note boundary
  const float c4 = static_cast<float>(midi_to_hz(60));
  const float e4 = static_cast<float>(midi_to_hz(64));
  bool saw_c4 = false, saw_e4 = false;
  std::size_t prev_tok = 0;
  for (std::size_t f = 0; f < b.contour.frames(); ++f) {
    const std::size_t tok = b.alignment.column_argmax(f);
    CHECK(tok >= prev_tok);  // monotone
    prev_tok = tok;
    if (b.phonemes.tokens[tok] == "AE1" && b.contour.voiced[f]) {
      if (b.contour.f0[f] == doctest::Approx(c4)) saw_c4 = true;
      if (b.contour.f0[f] == doctest::Approx(e4)) saw_e4 = true;
    }
  }
  CHECK(saw_c4);
  CHECK(saw_e4);
  CHECK(validate_bundle(b).empty());
}

TEST_CASE("compile_part reports unknown lyric words") {
  Lexicon empty;
  AudioClock clock;
  const auto parts = parse_musicxml(whole_note_a4_score());
  CHECK_THROWS_WITH_AS(compile_part(parts[0], empty, clock),
                       doctest::Contains("ah"), ValidationError);
}

TEST_CASE("transposition shifts the contour by semitones") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  const auto parts = parse_musicxml(whole_note_a4_score());
  const auto b = compile_part(parts[0], lex, clock, -12);
  CHECK(b.contour.f0[10] == doctest::Approx(220.0f));
}

TEST_CASE("compile_score pads parts to a common frame count") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;

  ScorePart a;
  ScoreEvent ev;
  ev.kind = ScoreEvent::Kind::note;
  ev.midi = 69;
  ev.duration_sec = 1.0;
  ev.syllable = Syllable{"ah", Syllabic::single};
  a.events.push_back(ev);

  ScorePart bpart = a;
  bpart.events[0].duration_sec = 1.05;  // 90 frames

  const auto bundles = compile_score({a, bpart}, lex, clock, 1);
  REQUIRE(bundles.size() == 2);
  const std::size_t frames = bundles[0].contour.frames();
  CHECK(frames == bundles[1].contour.frames());
  CHECK(frames == duration_to_frames(1.05, clock));
  CHECK(bundles[0].speaker_id != bundles[1].speaker_id);
  for (const auto& b : bundles) CHECK(validate_bundle(b).empty());
}

TEST_CASE("compile_score replicates voices with distinct speaker ids") {
  const Lexicon lex = testutil::test_lexicon();
  AudioClock clock;
  const auto parts = parse_musicxml(whole_note_a4_score());
  const auto bundles = compile_score({parts[0], parts[0], parts[0], parts[0]},
                                     lex, clock, 20);
  CHECK(bundles.size() == 80);
  std::set<std::uint32_t> ids;
  for (const auto& b : bundles) ids.insert(b.speaker_id);
  CHECK(ids.size() == 80);
}
