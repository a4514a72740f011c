#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "melcond/rhythm.hpp"
#include "melcond/serialize.hpp"
#include "melcond/text.hpp"
#include "melcond/types.hpp"
#include "melcond/xml.hpp"

namespace melcond {

enum class Syllabic { single, begin, middle, end };

struct Syllable {
  std::string text;
  Syllabic continuation = Syllabic::single;
};

struct ScoreEvent {
  enum class Kind { note, rest };
  Kind kind = Kind::rest;
  std::optional<int> midi;  // notes only, 0-127
  double duration_sec = 0.0;
  std::optional<Syllable> syllable;
};

struct ScorePart {
  std::string name;
  std::vector<ScoreEvent> events;
  double tempo_bpm = 120.0;  // tempo context in effect during parsing
};

inline double midi_to_hz(double midi) {
  if (midi < 0.0 || midi > 127.0)
    throw ValidationError("midi_to_hz: midi number out of [0, 127]");
  return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
}

namespace detail {

inline int step_to_semitone(const std::string& step) {
  switch (step.empty() ? '?' : step[0]) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
    default:
      throw ParseError("musicxml: bad pitch step '" + step + "'");
  }
}

inline double tempo_from_direction(const xml::Node& direction,
                                   double fallback) {
  if (const xml::Node* sound = direction.child("sound")) {
    const std::string t = sound->attr("tempo");
    if (!t.empty()) return std::stod(t);
  }
  if (const xml::Node* dt = direction.child("direction-type")) {
    if (const xml::Node* metro = dt->child("metronome")) {
      const std::string pm = metro->child_text("per-minute");
      if (!pm.empty()) return std::stod(pm);
    }
  }
  return fallback;
}

}  // namespace detail

// Parses an (unzipped) MusicXML score-partwise document. Ties are merged
// into single events, chords collapse to their first note, grace notes are
// skipped, and lyric syllables keep their continuation flags.
inline std::vector<ScorePart> parse_musicxml(std::string_view document) {
  const xml::Node root = xml::parse(document);
  if (root.name != "score-partwise")
    throw ParseError("musicxml: expected <score-partwise> root, got <" +
                     root.name + ">");

  std::map<std::string, std::string> part_names;
  if (const xml::Node* list = root.child("part-list")) {
    for (const xml::Node* sp : list->children_named("score-part"))
      part_names[sp->attr("id")] = sp->child_text("part-name");
  }

  std::vector<ScorePart> parts;
  for (const xml::Node* part_node : root.children_named("part")) {
    ScorePart part;
    const std::string id = part_node->attr("id");
    part.name = part_names.count(id) ? part_names[id] : id;

    double divisions = 0.0;
    double tempo = 120.0;  // MusicXML's conventional default
    std::optional<ScoreEvent> pending;  // open tie chain

    auto flush_pending = [&] {
      if (pending) {
        part.events.push_back(*pending);
        pending.reset();
      }
    };

    for (const xml::Node* measure : part_node->children_named("measure")) {
      for (const xml::Node& el : measure->children) {
        if (el.name == "attributes") {
          const std::string div = el.child_text("divisions");
          if (!div.empty()) divisions = std::stod(div);
        } else if (el.name == "direction") {
          tempo = detail::tempo_from_direction(el, tempo);
        } else if (el.name == "sound") {
          const std::string t = el.attr("tempo");
          if (!t.empty()) tempo = std::stod(t);
        } else if (el.name == "note") {
          if (el.child("grace")) continue;
          if (el.child("chord")) continue;  // keep the first chord note only
          const std::string dur_text = el.child_text("duration");
          if (dur_text.empty())
            throw ParseError("musicxml: note without <duration> in part " +
                             part.name);
          if (divisions <= 0.0)
            throw ParseError("musicxml: note before <divisions> in part " +
                             part.name);
          const double dur_sec =
              std::stod(dur_text) / divisions * 60.0 / tempo;

          ScoreEvent ev;
          ev.duration_sec = dur_sec;
          if (el.child("rest")) {
            ev.kind = ScoreEvent::Kind::rest;
          } else if (const xml::Node* pitch = el.child("pitch")) {
            ev.kind = ScoreEvent::Kind::note;
            const int semis = detail::step_to_semitone(pitch->child_text("step"));
            const int octave = std::stoi(pitch->child_text("octave", "4"));
            int alter = 0;
            const std::string alter_text = pitch->child_text("alter");
            if (!alter_text.empty())
              alter = static_cast<int>(std::lround(std::stod(alter_text)));
            ev.midi = (octave + 1) * 12 + semis + alter;
          } else {
            throw ParseError("musicxml: note with neither <pitch> nor <rest> "
                             "in part " + part.name);
          }

          bool tie_start = false, tie_stop = false;
          for (const xml::Node* tie : el.children_named("tie")) {
            const std::string type = tie->attr("type");
            tie_start |= type == "start";
            tie_stop |= type == "stop";
          }
          if (const xml::Node* notations = el.child("notations")) {
            for (const xml::Node* tied : notations->children_named("tied")) {
              const std::string type = tied->attr("type");
              tie_start |= type == "start";
              tie_stop |= type == "stop";
            }
          }

          if (const xml::Node* lyric = el.child("lyric")) {
            Syllable syl;
            syl.text = lyric->child_text("text");
            const std::string kind = lyric->child_text("syllabic", "single");
            if (kind == "begin") syl.continuation = Syllabic::begin;
            else if (kind == "middle") syl.continuation = Syllabic::middle;
            else if (kind == "end") syl.continuation = Syllabic::end;
            else syl.continuation = Syllabic::single;
            if (!syl.text.empty()) ev.syllable = syl;
          }

          if (tie_stop && pending && pending->kind == ev.kind &&
              pending->midi == ev.midi) {
            pending->duration_sec += ev.duration_sec;
            if (!pending->syllable) pending->syllable = ev.syllable;
            if (!tie_start) flush_pending();
          } else {
            flush_pending();
            if (tie_start && ev.kind == ScoreEvent::Kind::note)
              pending = ev;
            else
              part.events.push_back(ev);
          }
        }
      }
    }
    flush_pending();
    part.tempo_bpm = tempo;
    if (part.events.empty())
      throw ParseError("musicxml: part " + part.name + " has no events");
    parts.push_back(std::move(part));
  }
  if (parts.empty()) throw ParseError("musicxml: score has no parts");
  return parts;
}

// Splits one note event's frame budget across its phones: consonants get
// class durations (clamped proportionally so they never exceed half the
// event), vowels split the remainder equally; largest-remainder allocation
// keeps the total exact.
inline std::vector<std::size_t> assign_phone_durations(
    double event_duration_sec, const std::vector<std::string>& phones,
    const AudioClock& clock) {
  if (phones.empty())
    throw ValidationError("assign_phone_durations: no phones");
  const std::size_t total = duration_to_frames(event_duration_sec, clock);
  if (total == 0)
    throw ValidationError("assign_phone_durations: event shorter than one "
                          "frame");

  std::vector<std::size_t> vowel_idx;
  double consonant_sec = 0.0;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (is_vowel(phones[i]))
      vowel_idx.push_back(i);
    else if (!is_silence(phones[i]))
      consonant_sec += consonant_duration_sec(phones[i]);
  }

  const double clamp = consonant_sec > 0.5 * event_duration_sec
                           ? 0.5 * event_duration_sec / consonant_sec
                           : 1.0;

  std::vector<std::size_t> frames(phones.size(), 0);
  if (vowel_idx.empty()) {
    // all-consonant event: largest-remainder split proportional to class
    // durations
    std::vector<double> ideal(phones.size(), 0.0);
    double ideal_total = 0.0;
    for (std::size_t i = 0; i < phones.size(); ++i) {
      ideal[i] = is_silence(phones[i]) ? 0.1
                                       : consonant_duration_sec(phones[i]);
      ideal_total += ideal[i];
    }
    std::size_t assigned = 0;
    std::vector<std::pair<double, std::size_t>> rema;
    for (std::size_t i = 0; i < phones.size(); ++i) {
      const double share = total * ideal[i] / ideal_total;
      frames[i] = static_cast<std::size_t>(share);
      assigned += frames[i];
      rema.emplace_back(share - std::floor(share), i);
    }
    std::sort(rema.rbegin(), rema.rend());
    for (std::size_t k = 0; assigned < total; ++k, ++assigned)
      frames[rema[k % rema.size()].second] += 1;
    return frames;
  }

  std::size_t consonant_frames = 0;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (is_vowel(phones[i]) || is_silence(phones[i])) continue;
    frames[i] = duration_to_frames(consonant_duration_sec(phones[i]) * clamp,
                                   clock);
    consonant_frames += frames[i];
  }
  if (total < consonant_frames + vowel_idx.size())
    throw ValidationError("assign_phone_durations: event too short for its "
                          "phones");
  const std::size_t remainder = total - consonant_frames;
  const std::size_t base = remainder / vowel_idx.size();
  const std::size_t extra = remainder % vowel_idx.size();
  for (std::size_t k = 0; k < vowel_idx.size(); ++k)
    frames[vowel_idx[k]] = base + (k < extra ? 1 : 0);
  return frames;
}

inline std::vector<std::size_t> assign_phone_durations(
    const ScoreEvent& event, const std::vector<std::string>& phones,
    const AudioClock& clock) {
  if (event.kind != ScoreEvent::Kind::note)
    throw ValidationError("assign_phone_durations: event must be a note");
  return assign_phone_durations(event.duration_sec, phones, clock);
}

namespace detail {

// One contiguous run of frames realizing one token.
struct Segment {
  std::size_t token;
  std::size_t frames;
  float f0;  // 0 when unvoiced
  bool voiced;
};

struct WordGroup {
  std::vector<ScoreEvent> events;  // all events of the word, in order
  std::string text;                // concatenated syllables
};

// Distributes a word's phones over its events. Each event gets a contiguous
// phone run holding a near-equal share of the vowels; consonants before a
// vowel travel with it (onset), trailing consonants go to the last event.
// Events beyond the vowel count sustain the previous vowel (melisma).
inline std::vector<std::vector<std::size_t>> partition_phones(
    const std::vector<std::string>& phones, std::size_t num_events) {
  std::vector<std::size_t> vowel_pos;
  for (std::size_t i = 0; i < phones.size(); ++i)
    if (is_vowel(phones[i])) vowel_pos.push_back(i);

  std::vector<std::vector<std::size_t>> groups(num_events);
  const std::size_t V = vowel_pos.size();
  if (V == 0) {
    for (std::size_t i = 0; i < phones.size(); ++i) groups[0].push_back(i);
    return groups;
  }

  std::vector<std::size_t> counts(num_events, 0);
  if (V >= num_events) {
    const std::size_t base = V / num_events, rem = V % num_events;
    for (std::size_t g = 0; g < num_events; ++g)
      counts[g] = base + (g < rem ? 1 : 0);
  } else {
    for (std::size_t g = 0; g < V; ++g) counts[g] = 1;
  }

  std::size_t cursor = 0, vidx = 0;
  for (std::size_t g = 0; g < num_events; ++g) {
    if (counts[g] == 0) continue;
    const std::size_t last_vowel = vowel_pos[vidx + counts[g] - 1];
    for (std::size_t i = cursor; i <= last_vowel; ++i) groups[g].push_back(i);
    cursor = last_vowel + 1;
    vidx += counts[g];
  }
  for (std::size_t i = cursor; i < phones.size(); ++i)
    groups[num_events - 1].push_back(i);
  return groups;
}

}  // namespace detail

// Compiles one part into a conditioning bundle: phoneme tokens (rests become
// silence tokens), a hard alignment from per-phone frame counts, and a
// contour that is flat at the event's frequency on vowel frames and zero on
// consonant and rest frames.
inline ConditioningBundle compile_part(const ScorePart& part,
                                       const Lexicon& lexicon,
                                       const AudioClock& clock,
                                       int transpose_semitones = 0,
                                       std::uint32_t speaker_id = 0) {
  clock.check();
  if (part.events.empty())
    throw ValidationError("compile_part: part has no events");

  std::vector<std::string> tokens;
  std::vector<detail::Segment> segments;

  // melisma continuation state: the vowel token the current word can sustain
  std::optional<std::size_t> last_vowel_token;
  std::optional<std::string> last_vowel_phone;

  auto event_hz = [&](const ScoreEvent& ev) {
    return static_cast<float>(
        midi_to_hz(*ev.midi + transpose_semitones));
  };

  auto emit_word = [&](const detail::WordGroup& word, std::size_t word_index) {
    std::vector<std::string> phones;
    if (word.text.empty()) {
      phones = {"AA1"};  // vocalise for lyric-less notes
    } else {
      const auto cleaned = clean_text(word.text);
      const std::string key = cleaned.empty() ? "" : cleaned[0];
      const auto* pron = key.empty() ? nullptr : lexicon.lookup(key);
      if (!pron)
        throw ValidationError("compile_part: word '" + word.text +
                              "' (event " + std::to_string(word_index) +
                              ") not in lexicon");
      phones = *pron;
    }

    const auto groups = detail::partition_phones(phones, word.events.size());
    std::vector<std::size_t> phone_token(phones.size(),
                                         static_cast<std::size_t>(-1));

    for (std::size_t g = 0; g < word.events.size(); ++g) {
      const ScoreEvent& ev = word.events[g];
      // event phone list: a sustained vowel first when this event introduces
      // no vowel of its own
      std::vector<std::string> ev_phones;
      std::vector<std::size_t> ev_tokens;
      bool group_has_vowel = false;
      for (std::size_t idx : groups[g])
        group_has_vowel |= is_vowel(phones[idx]);
      if (!group_has_vowel && last_vowel_token) {
        ev_phones.push_back(*last_vowel_phone);
        ev_tokens.push_back(*last_vowel_token);
      }
      for (std::size_t idx : groups[g]) {
        if (phone_token[idx] == static_cast<std::size_t>(-1)) {
          phone_token[idx] = tokens.size();
          tokens.push_back(phones[idx]);
        }
        ev_phones.push_back(phones[idx]);
        ev_tokens.push_back(phone_token[idx]);
      }
      if (ev_phones.empty() && last_vowel_token) {
        ev_phones.push_back(*last_vowel_phone);
        ev_tokens.push_back(*last_vowel_token);
      }
      if (ev_phones.empty())
        throw ValidationError("compile_part: event " +
                              std::to_string(word_index + g) +
                              " has no phones to sing");

      std::vector<std::size_t> frames;
      try {
        frames = assign_phone_durations(ev.duration_sec, ev_phones, clock);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + " (event " +
                              std::to_string(word_index + g) + ")");
      }
      for (std::size_t i = 0; i < ev_phones.size(); ++i) {
        const bool vowel = is_vowel(ev_phones[i]);
        segments.push_back({ev_tokens[i], frames[i],
                            vowel ? event_hz(ev) : 0.0f, vowel});
        if (vowel) {
          last_vowel_token = ev_tokens[i];
          last_vowel_phone = ev_phones[i];
        }
      }
    }
  };

  detail::WordGroup word;
  std::size_t word_start_index = 0;
  auto flush_word = [&] {
    if (!word.events.empty()) emit_word(word, word_start_index);
    word = {};
  };

  for (std::size_t e = 0; e < part.events.size(); ++e) {
    const ScoreEvent& ev = part.events[e];
    if (ev.kind == ScoreEvent::Kind::rest) {
      flush_word();
      last_vowel_token.reset();
      last_vowel_phone.reset();
      const std::size_t frames = duration_to_frames(ev.duration_sec, clock);
      if (frames > 0) {
        segments.push_back({tokens.size(), frames, 0.0f, false});
        tokens.emplace_back(kSilenceToken);
      }
      continue;
    }
    const bool starts_word =
        ev.syllable && (ev.syllable->continuation == Syllabic::single ||
                        ev.syllable->continuation == Syllabic::begin);
    if (starts_word) {
      flush_word();
      word_start_index = e;
    }
    if (ev.syllable) word.text += ev.syllable->text;
    word.events.push_back(ev);
  }
  flush_word();

  if (tokens.empty())
    throw ValidationError("compile_part: no tokens produced");

  // segments with the same token are contiguous; fold them into per-token
  // durations
  std::vector<std::size_t> durations(tokens.size(), 0);
  for (const auto& seg : segments) durations[seg.token] += seg.frames;

  ConditioningBundle bundle;
  bundle.clock = clock;
  bundle.phonemes.tokens = tokens;
  bundle.alignment = alignment_from_durations(durations);
  bundle.speaker_id = speaker_id;
  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < seg.frames; ++i) {
      bundle.contour.f0.push_back(seg.voiced ? seg.f0 : 0.0f);
      bundle.contour.voiced.push_back(seg.voiced ? 1 : 0);
    }
  }
  auto violations = validate_bundle(bundle);
  if (!violations.empty())
    throw ValidationError("compile_part: produced invalid bundle: " +
                          violations[0]);
  return bundle;
}

// Pads a bundle with trailing silence frames up to target_frames.
inline void pad_bundle_to(ConditioningBundle& bundle,
                          std::size_t target_frames) {
  const std::size_t cur = bundle.contour.frames();
  if (cur >= target_frames) return;
  const std::size_t extra = target_frames - cur;
  std::vector<std::uint32_t> frame_tokens = bundle.alignment.frame_tokens();
  std::size_t sil_token;
  if (!bundle.phonemes.tokens.empty() &&
      bundle.phonemes.tokens.back() == kSilenceToken) {
    sil_token = bundle.phonemes.size() - 1;
  } else {
    sil_token = bundle.phonemes.size();
    bundle.phonemes.tokens.emplace_back(kSilenceToken);
  }
  frame_tokens.insert(frame_tokens.end(), extra,
                      static_cast<std::uint32_t>(sil_token));
  bundle.alignment = AlignmentMap::make_hard(std::move(frame_tokens),
                                             bundle.phonemes.size());
  bundle.contour.f0.insert(bundle.contour.f0.end(), extra, 0.0f);
  bundle.contour.voiced.insert(bundle.contour.voiced.end(), extra, 0);
}

// Compiles every part and replicates it per voice with sequential speaker id
// placeholders; all bundles are padded to a shared frame count.
inline std::vector<ConditioningBundle> compile_score(
    const std::vector<ScorePart>& parts, const Lexicon& lexicon,
    const AudioClock& clock, std::size_t voices_per_part = 1,
    const std::vector<int>& transpose_semitones = {}) {
  if (voices_per_part < 1)
    throw ValidationError("compile_score: voices_per_part must be >= 1");
  std::vector<ConditioningBundle> per_part;
  per_part.reserve(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const int transpose =
        p < transpose_semitones.size() ? transpose_semitones[p] : 0;
    per_part.push_back(compile_part(parts[p], lexicon, clock, transpose));
  }
  std::size_t max_frames = 0;
  for (const auto& b : per_part)
    max_frames = std::max(max_frames, b.contour.frames());
  for (auto& b : per_part) pad_bundle_to(b, max_frames);

  std::vector<ConditioningBundle> out;
  out.reserve(parts.size() * voices_per_part);
  std::uint32_t speaker = 0;
  for (const auto& b : per_part) {
    for (std::size_t v = 0; v < voices_per_part; ++v) {
      out.push_back(b);
      out.back().speaker_id = speaker++;
    }
  }
  return out;
}

}  // namespace melcond
