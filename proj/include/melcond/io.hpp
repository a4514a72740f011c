#pragma once

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "melcond/serialize.hpp"
#include "melcond/types.hpp"

namespace melcond {

inline void write_bundle_file(const std::string& path,
                              const ConditioningBundle& bundle) {
  const auto bytes = serialize_bundle(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot create bundle file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("failed writing bundle file: " + path);
}

inline ConditioningBundle read_bundle_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open bundle file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_bundle(bytes);
}

// "MELS" | version u16 | rows u32 | cols u32 | f32 LE row-major
inline void write_mels_file(const std::string& path,
                            const MelSpectrogram& mel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot create mel file: " + path);
  out.write("MELS", 4);
  const std::uint16_t version = 1;
  const std::uint32_t rows = MelSpectrogram::kBands;
  const std::uint32_t cols = static_cast<std::uint32_t>(mel.frames);
  out.write(reinterpret_cast<const char*>(&version), 2);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(mel.values.data()),
            static_cast<std::streamsize>(mel.values.size() * 4));
  if (!out) throw ParseError("failed writing mel file: " + path);
}

inline void write_mel_csv(std::ostream& out, const MelSpectrogram& mel) {
  for (std::size_t m = 0; m < MelSpectrogram::kBands; ++m) {
    for (std::size_t f = 0; f < mel.frames; ++f) {
      if (f) out << ',';
      out << mel.at(m, f);
    }
    out << '\n';
  }
}

// contour CSV: header line, then frame,f0_hz,voiced
inline void write_contour_csv(std::ostream& out, const PitchContour& c) {
  out << "frame,f0_hz,voiced\n";
  for (std::size_t i = 0; i < c.frames(); ++i)
    out << i << ',' << c.f0[i] << ',' << int(c.voiced[i] ? 1 : 0) << '\n';
}

inline PitchContour read_contour_csv(std::istream& in) {
  PitchContour c;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("frame", 0) == 0) continue;  // optional header
    }
    std::istringstream ss(line);
    std::string frame_s, f0_s, voiced_s;
    if (!(std::getline(ss, frame_s, ',') && std::getline(ss, f0_s, ',') &&
          std::getline(ss, voiced_s)))
      throw ParseError("bad contour csv line: " + line);
    c.f0.push_back(std::stof(f0_s));
    c.voiced.push_back(voiced_s.find('1') != std::string::npos ? 1 : 0);
  }
  if (c.f0.empty()) throw ParseError("contour csv has no frames");
  return c;
}

inline PitchContour read_contour_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open contour csv: " + path);
  return read_contour_csv(in);
}

}  // namespace melcond
