#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "melcond/melcond.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace melcond;

namespace {

struct GlobalOpts {
  AudioClock clock;
};

// writes data to a temp file in the target directory, then renames
void atomic_write(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ParseError("cannot create file: " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ParseError("failed writing file: " + path.string());
  }
  fs::rename(tmp, path);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// contour overlay as a plain PPM: reference in white, estimate in orange,
// log-frequency axis between 50 and 1100 Hz
void write_plot(const fs::path& path, const PitchContour& ref,
                const PitchContour* est) {
  const int h = 220;
  const int w = static_cast<int>(ref.frames());
  std::vector<std::uint8_t> px(3 * w * h, 20);
  auto put = [&](int x, int y, int r, int g, int b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    auto* p = &px[3 * (y * w + x)];
    p[0] = std::uint8_t(r); p[1] = std::uint8_t(g); p[2] = std::uint8_t(b);
  };
  auto row = [&](float hz) {
    const double lo = std::log(50.0), hi = std::log(1100.0);
    const double t = (std::log(std::max(50.0, double(hz))) - lo) / (hi - lo);
    return h - 1 - int(t * (h - 1));
  };
  for (std::size_t f = 0; f < ref.frames(); ++f)
    if (ref.voiced[f]) put(int(f), row(ref.f0[f]), 240, 240, 240);
  if (est)
    for (std::size_t f = 0; f < est->frames() && f < ref.frames(); ++f)
      if (est->voiced[f]) put(int(f), row(est->f0[f]) + 1, 250, 150, 40);
  std::ostringstream out;
  out << "P6\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()),
            static_cast<std::streamsize>(px.size()));
  atomic_write(path, out.str());
}

PitchContour contour_from_wav(const std::string& path, const YinConfig& cfg,
                              const AudioClock& clock) {
  auto sig = read_wav(path);
  if (sig.sample_rate != clock.sample_rate)
    throw ValidationError("sample rate mismatch: " + path + " has " +
                          std::to_string(sig.sample_rate) + " Hz, clock wants " +
                          std::to_string(clock.sample_rate));
  return extract_contour(sig, cfg, clock);
}

json report_json(const MetricReport& r) {
  return json{{"gpe", r.gpe},
              {"vde", r.vde},
              {"ffe", r.ffe},
              {"n_frames", r.n_frames},
              {"n_both_voiced", r.n_both_voiced}};
}

int run(int argc, char** argv) {
  CLI::App app{"voice-synthesis conditioning toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--sample-rate", g.clock.sample_rate, "analysis sample rate");
  app.add_option("--hop", g.clock.hop, "hop size in samples");
  app.add_option("--fft", g.clock.fft_size, "FFT size");
  app.add_option("--window", g.clock.window_size, "analysis window size");

  // pitch extract
  auto* pitch = app.add_subcommand("pitch", "pitch contour tools");
  auto* extract = pitch->add_subcommand("extract", "extract an f0 contour");
  std::string ex_wav, ex_out, ex_plot;
  YinConfig yin;
  extract->add_option("wav", ex_wav, "input wav file")->required();
  extract->add_option("--threshold", yin.harmonicity_threshold,
                      "harmonicity threshold");
  extract->add_option("--fmin", yin.f_min, "lowest f0 in Hz");
  extract->add_option("--fmax", yin.f_max, "highest f0 in Hz");
  extract->add_flag("--median", yin.median_filter, "3-frame median on f0");
  extract->add_option("-o,--output", ex_out, "contour csv path (default stdout)");
  extract->add_option("--plot", ex_plot, "write a contour image (ppm)");

  // mel
  auto* mel = app.add_subcommand("mel", "mel-spectrogram extraction");
  std::string mel_wav, mel_out, mel_csv;
  bool mel_linear = false;
  mel->add_option("wav", mel_wav, "input wav file")->required();
  mel->add_option("-o,--output", mel_out, "binary mel file")->required();
  mel->add_option("--csv", mel_csv, "also write a csv dump");
  mel->add_flag("--linear", mel_linear, "linear power instead of log");

  // text g2p
  auto* text = app.add_subcommand("text", "text front-end tools");
  auto* g2p_cmd = text->add_subcommand("g2p", "sentence to phoneme tokens");
  std::string g2p_lex, g2p_sentence;
  g2p_cmd->add_option("--lexicon", g2p_lex, "lexicon file")->required();
  g2p_cmd->add_option("sentence", g2p_sentence, "input sentence")->required();

  // score compile
  auto* score = app.add_subcommand("score", "music score tools");
  auto* compile = score->add_subcommand("compile", "MusicXML to bundles");
  std::string sc_file, sc_lex, sc_dir;
  std::size_t sc_voices = 1;
  bool sc_contours = false;
  std::vector<int> sc_transpose;
  compile->add_option("score", sc_file, "MusicXML file")->required();
  compile->add_option("--lexicon", sc_lex, "lexicon file")->required();
  compile->add_option("--voices-per-part", sc_voices, "voices per part");
  compile->add_option("--transpose", sc_transpose,
                      "per-part transpose in semitones");
  compile->add_flag("--contours", sc_contours,
                    "also write each voice's contour as csv");
  compile->add_option("-o,--output", sc_dir, "output directory")->required();

  // rhythm warp
  auto* rhythm = app.add_subcommand("rhythm", "alignment map tools");
  auto* warp = rhythm->add_subcommand("warp", "time-warp a bundle");
  std::string w_curve, w_in, w_out;
  warp->add_option("--rate-curve", w_curve, "breakpoints like 0:0.5,1:2.0")
      ->required();
  warp->add_option("bundle", w_in, "input .mcb bundle")->required();
  warp->add_option("-o,--output", w_out, "output .mcb bundle")->required();

  // metrics ffe
  auto* metrics = app.add_subcommand("metrics", "pitch fidelity metrics");
  auto* ffe = metrics->add_subcommand("ffe", "GPE/VDE/FFE between two inputs");
  std::vector<std::string> ffe_inputs;
  std::string ffe_plot;
  bool ffe_contours = false;
  ffe->add_option("inputs", ffe_inputs, "reference and estimate")
      ->expected(2)
      ->required();
  ffe->add_flag("--contours", ffe_contours, "inputs are contour csv files");
  ffe->add_option("--plot", ffe_plot, "write an overlay image (ppm)");

  // render
  auto* render = app.add_subcommand("render", "synthesize one bundle");
  std::string r_in, r_out;
  RenderConfig rcfg;
  render->add_option("bundle", r_in, "input .mcb bundle")->required();
  render->add_option("-o,--output", r_out, "output wav")->required();
  render->add_option("--seed", rcfg.seed, "render seed");

  // choir
  auto* choir = app.add_subcommand("choir", "synthesize a compiled score");
  std::string c_manifest, c_out;
  double c_detune = 8.0, c_jitter = 10.0;
  RenderConfig ccfg;
  choir->add_option("manifest", c_manifest, "manifest.json from score compile")
      ->required();
  choir->add_option("-o,--output", c_out, "output wav")->required();
  choir->add_option("--detune-cents", c_detune, "max per-voice detune");
  choir->add_option("--jitter-ms", c_jitter, "max per-voice onset jitter");
  choir->add_option("--seed", ccfg.seed, "render seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.clock.check();

  if (*extract) {
    yin.check(g.clock);
    const auto c = contour_from_wav(ex_wav, yin, g.clock);
    if (ex_out.empty()) {
      write_contour_csv(std::cout, c);
    } else {
      std::ostringstream ss;
      write_contour_csv(ss, c);
      atomic_write(ex_out, ss.str());
    }
    if (!ex_plot.empty()) write_plot(ex_plot, c, nullptr);
    return 0;
  }

  if (*mel) {
    const auto sig = read_wav(mel_wav);
    if (sig.sample_rate != g.clock.sample_rate)
      throw ValidationError("sample rate mismatch: " + mel_wav);
    const auto m = mel_spectrogram(sig, g.clock,
                                   mel_linear
                                       ? MelSpectrogram::Scale::linear_power
                                       : MelSpectrogram::Scale::log_compressed);
    write_mels_file(mel_out, m);
    if (!mel_csv.empty()) {
      std::ostringstream ss;
      write_mel_csv(ss, m);
      atomic_write(mel_csv, ss.str());
    }
    std::cout << json{{"frames", m.frames}, {"bands", MelSpectrogram::kBands}}
              << '\n';
    return 0;
  }

  if (*g2p_cmd) {
    const Lexicon lex = Lexicon::load_file(g2p_lex);
    const auto seq = g2p(clean_text(g2p_sentence), lex);
    for (const auto& tok : seq.tokens) std::cout << tok << '\n';
    return 0;
  }

  if (*compile) {
    const Lexicon lex = Lexicon::load_file(sc_lex);
    const auto parts = parse_musicxml(slurp(sc_file));
    const auto bundles =
        compile_score(parts, lex, g.clock, sc_voices, sc_transpose);
    fs::create_directories(sc_dir);
    json manifest;
    manifest["frames"] = bundles.empty() ? 0 : bundles.front().contour.frames();
    manifest["clock"] = {{"sample_rate", g.clock.sample_rate},
                         {"hop", g.clock.hop},
                         {"fft", g.clock.fft_size},
                         {"window", g.clock.window_size}};
    manifest["parts"] = json::array();
    manifest["bundles"] = json::array();
    for (std::size_t p = 0; p < parts.size(); ++p) {
      json voices = json::array();
      for (std::size_t v = 0; v < sc_voices; ++v) {
        std::ostringstream name;
        name << "part" << p << "_voice" << v << ".mcb";
        const auto& b = bundles[p * sc_voices + v];
        const auto bytes = serialize_bundle(b);
        atomic_write(fs::path(sc_dir) / name.str(),
                     std::string(bytes.begin(), bytes.end()));
        if (sc_contours) {
          std::ostringstream csv;
          write_contour_csv(csv, b.contour);
          std::ostringstream cname;
          cname << "part" << p << "_voice" << v << ".csv";
          atomic_write(fs::path(sc_dir) / cname.str(), csv.str());
        }
        voices.push_back(name.str());
        manifest["bundles"].push_back(name.str());
      }
      manifest["parts"].push_back({{"name", parts[p].name},
                                   {"tempo_bpm", parts[p].tempo_bpm},
                                   {"voices", voices}});
    }
    atomic_write(fs::path(sc_dir) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << manifest.dump() << '\n';
    return 0;
  }

  if (*warp) {
    const auto curve = RateCurve::parse(w_curve);
    auto b = read_bundle_file(w_in);
    const auto warped_map = warp_alignment(b.alignment, curve);
    b.contour = warp_contour(b.contour, curve, warped_map.frames());
    b.alignment = warped_map;
    write_bundle_file(w_out, b);
    std::cout << json{{"frames", warped_map.frames()}} << '\n';
    return 0;
  }

  if (*ffe) {
    MetricReport r;
    PitchContour ref, est;
    if (ffe_contours) {
      ref = read_contour_csv_file(ffe_inputs[0]);
      est = read_contour_csv_file(ffe_inputs[1]);
    } else {
      ref = contour_from_wav(ffe_inputs[0], YinConfig{}, g.clock);
      est = contour_from_wav(ffe_inputs[1], YinConfig{}, g.clock);
    }
    // analysis of an F-frame render yields F+1 frames; tolerate exactly one
    // frame of length skew by truncating the longer contour
    const std::size_t rf = ref.frames(), ef = est.frames();
    if (rf + 1 == ef || ef + 1 == rf) {
      const std::size_t n = std::min(rf, ef);
      ref.f0.resize(n); ref.voiced.resize(n);
      est.f0.resize(n); est.voiced.resize(n);
    }
    r = compare_contours(ref, est);
    if (!ffe_plot.empty()) write_plot(ffe_plot, ref, &est);
    std::cout << report_json(r) << '\n';
    return 0;
  }

  if (*render) {
    const auto b = read_bundle_file(r_in);
    write_wav(r_out, render_voice(b, rcfg));
    return 0;
  }

  if (*choir) {
    const json manifest = json::parse(slurp(c_manifest));
    const fs::path base = fs::path(c_manifest).parent_path();
    std::vector<ConditioningBundle> bundles;
    for (const auto& rel : manifest.at("bundles"))
      bundles.push_back(read_bundle_file((base / rel.get<std::string>()).string()));
    write_wav(c_out, render_choir(bundles, ccfg, c_detune, c_jitter));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
