#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "melcond/types.hpp"

namespace melcond {

inline constexpr std::string_view kSilenceToken = "SIL";

// ARPAbet base symbols. Vowels appear in sequences with a stress digit
// (AA1, IY0, ...) or bare.
inline const std::array<std::string_view, 15>& arpabet_vowels() {
  static const std::array<std::string_view, 15> v = {
      "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
      "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  return v;
}

inline const std::array<std::string_view, 24>& arpabet_consonants() {
  static const std::array<std::string_view, 24> c = {
      "B", "CH", "D",  "DH", "F", "G", "HH", "JH", "K",  "L",  "M", "N",
      "NG", "P",  "R", "S",  "SH", "T", "TH", "V", "W",  "Y",  "Z", "ZH"};
  return c;
}

// Consonant duration classes used by the score compiler.
enum class ConsonantClass { plosive, fricative, sonorant };

inline std::string strip_stress(std::string_view phone) {
  if (!phone.empty() && phone.back() >= '0' && phone.back() <= '2')
    return std::string(phone.substr(0, phone.size() - 1));
  return std::string(phone);
}

inline bool in_inventory(std::string_view phone) {
  if (phone == kSilenceToken) return true;
  const std::string base = strip_stress(phone);
  for (auto v : arpabet_vowels())
    if (base == v) return true;
  // stress digits are only legal on vowels
  if (base.size() != phone.size()) return false;
  for (auto c : arpabet_consonants())
    if (phone == c) return true;
  return false;
}

// Vowel iff the symbol carries a stress digit or is a bare vowel symbol.
inline bool is_vowel(std::string_view phone) {
  if (!in_inventory(phone))
    throw ValidationError("is_vowel: unknown phone '" + std::string(phone) +
                          "'");
  if (phone == kSilenceToken) return false;
  const std::string base = strip_stress(phone);
  for (auto v : arpabet_vowels())
    if (base == v) return true;
  return false;
}

inline bool is_silence(std::string_view phone) { return phone == kSilenceToken; }

inline ConsonantClass consonant_class(std::string_view phone) {
  static const std::map<std::string_view, ConsonantClass> table = {
      {"B", ConsonantClass::plosive},   {"D", ConsonantClass::plosive},
      {"G", ConsonantClass::plosive},   {"P", ConsonantClass::plosive},
      {"T", ConsonantClass::plosive},   {"K", ConsonantClass::plosive},
      {"CH", ConsonantClass::plosive},  {"JH", ConsonantClass::plosive},
      {"F", ConsonantClass::fricative}, {"V", ConsonantClass::fricative},
      {"TH", ConsonantClass::fricative},{"DH", ConsonantClass::fricative},
      {"S", ConsonantClass::fricative}, {"Z", ConsonantClass::fricative},
      {"SH", ConsonantClass::fricative},{"ZH", ConsonantClass::fricative},
      {"HH", ConsonantClass::fricative},{"M", ConsonantClass::sonorant},
      {"N", ConsonantClass::sonorant},  {"NG", ConsonantClass::sonorant},
      {"L", ConsonantClass::sonorant},  {"R", ConsonantClass::sonorant},
      {"W", ConsonantClass::sonorant},  {"Y", ConsonantClass::sonorant}};
  auto it = table.find(phone);
  if (it == table.end())
    throw ValidationError("consonant_class: '" + std::string(phone) +
                          "' is not a consonant");
  return it->second;
}

// Nominal consonant durations, interpolating the 20-100 ms band by class.
inline double consonant_duration_sec(std::string_view phone) {
  switch (consonant_class(phone)) {
    case ConsonantClass::plosive:
      return 0.020;
    case ConsonantClass::fricative:
      return 0.100;
    case ConsonantClass::sonorant:
      return 0.060;
  }
  return 0.060;
}

class Lexicon {
 public:
  void add(const std::string& word, std::vector<std::string> phones) {
    if (phones.empty())
      throw ValidationError("Lexicon: empty pronunciation for '" + word + "'");
    for (const auto& p : phones)
      if (!in_inventory(p))
        throw ValidationError("Lexicon: unknown phone '" + p + "' for '" +
                              word + "'");
    // first pronunciation wins
    entries_.try_emplace(word, std::move(phones));
  }

  const std::vector<std::string>* lookup(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  // "word TAB phone phone ..." lines; '#' starts a comment.
  static Lexicon load(std::istream& in) {
    Lexicon lex;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError("lexicon line missing TAB: " + line);
      std::string word = line.substr(0, tab);
      std::istringstream rest(line.substr(tab + 1));
      std::vector<std::string> phones;
      std::string p;
      while (rest >> p) phones.push_back(p);
      lex.add(word, std::move(phones));
    }
    return lex;
  }

  static Lexicon load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open lexicon file: " + path);
    return load(in);
  }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Lowercase, collapse whitespace, strip punctuation except intra-word
// apostrophes.
inline std::vector<std::string> clean_text(std::string_view raw) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) words.push_back(cur);
    cur.clear();
  };
  for (char ch : raw) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (ch == '\'') {
      cur.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return words;
}

// Concatenates lexicon pronunciations with a silence token between words.
// Unknown words are an error carrying the full list.
inline PhonemeSequence g2p(const std::vector<std::string>& words,
                           const Lexicon& lexicon) {
  std::vector<std::string> unknown;
  for (const auto& w : words)
    if (!lexicon.lookup(w)) unknown.push_back(w);
  if (!unknown.empty()) {
    std::string msg = "g2p: unknown word(s):";
    for (const auto& w : unknown) msg += " " + w;
    throw ValidationError(msg);
  }
  if (words.empty())
    throw ValidationError("g2p: no words (phoneme sequence must be non-empty)");

  PhonemeSequence seq;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) seq.tokens.emplace_back(kSilenceToken);
    const auto& phones = *lexicon.lookup(words[i]);
    seq.tokens.insert(seq.tokens.end(), phones.begin(), phones.end());
  }
  return seq;
}

}  // namespace melcond
