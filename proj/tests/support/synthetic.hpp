// Copyright 2026 The Prosody Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Synthetic signals and a synthetic two-language corpus for tests.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "prosody/prosody.hpp"

namespace prosody::testing {

inline AudioTrack make_track(std::vector<double> samples, int rate = 16000, std::string id = "test") {
  AudioTrack t;
  t.track_id = std::move(id);
  t.sample_rate = rate;
  t.samples = std::move(samples);
  return t;
}

inline std::vector<double> sine(double hz, double seconds, int rate = 16000, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
  return x;
}

inline std::vector<double> white_noise(double seconds, int rate, double rms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, rms);
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (auto& v : x) v = g(rng);
  return x;
}

/// Sum of harmonics k * f0 (amplitude 1/k) up to 4 kHz.
inline std::vector<double> harmonic(double f0, double seconds, int rate = 16000, double amp = 0.3) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)), 0.0);
  for (int k = 1; k * f0 < 4000.0; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += amp / k * std::sin(2.0 * M_PI * k * f0 * static_cast<double>(i) / rate + 0.3 * k);
    }
  }
  return x;
}

/// Glottal-like pulse train: a decaying resonance excited once per period.
inline std::vector<double> pulse_train(double f0, double seconds, int rate = 16000) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double phase = std::fmod(static_cast<double>(i) * f0 / rate, 1.0);
    const double t = phase / f0;  // seconds since the last pulse
    x[i] = std::exp(-t * 400.0) * std::sin(2.0 * M_PI * 700.0 * t);
  }
  return x;
}

inline std::vector<double> am_tone(double carrier_hz, double mod_hz, double depth, double seconds,
                                   int rate = 16000, double amp = 0.3) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    x[i] = amp * (1.0 + depth * std::sin(2.0 * M_PI * mod_hz * t)) * std::sin(2.0 * M_PI * carrier_hz * t);
  }
  return x;
}

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (const double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline void add_in_place(std::vector<double>& x, const std::vector<double>& y) {
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) x[i] += y[i];
}

/// Prosodic "style" of a rendered utterance.
struct UtteranceStyle {
  double duration_s = 2.0;
  double f0_hz = 150.0;         // speaker base
  double f0_slope = 0.0;        // octaves across the utterance
  double bump_pos = 0.5;        // position of a pitch accent, 0..1
  double bump_octaves = 0.3;
  double syllable_rate = 4.5;   // per second
  double breathiness = 0.05;    // aspiration noise relative level
  double loudness = 0.3;
  double final_rise = 0.0;      // octaves over the last 15%
};

/// Syllables of voiced pulses with a pitch contour, plus aspiration noise.
inline std::vector<double> render_utterance(const UtteranceStyle& s, int rate, std::mt19937_64& rng) {
  const std::size_t n = static_cast<std::size_t>(std::lround(s.duration_s * rate));
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    const double t = static_cast<double>(i) / rate;
    double octaves = s.f0_slope * (u - 0.5) +
                     s.bump_octaves * std::exp(-std::pow((u - s.bump_pos) / 0.12, 2.0));
    if (u > 0.85) octaves += s.final_rise * (u - 0.85) / 0.15;
    const double f0 = s.f0_hz * std::exp2(octaves);
    phase += f0 / rate;
    if (phase >= 1.0) phase -= 1.0;
    const double tp = phase / f0;
    const double source = std::exp(-tp * 350.0) * std::sin(2.0 * M_PI * 600.0 * tp) +
                          0.5 * std::exp(-tp * 500.0) * std::sin(2.0 * M_PI * 1500.0 * tp);
    // Syllable envelope: raised cosine bursts with short gaps.
    const double syl = std::fmod(t * s.syllable_rate, 1.0);
    const double env = syl < 0.8 ? std::pow(std::sin(M_PI * syl / 0.8), 2.0) : 0.0;
    const double edge = std::min({1.0, u * 20.0, (1.0 - u) * 20.0});
    lp = 0.7 * lp + 0.3 * g(rng);
    x[i] = s.loudness * edge * (env * (source + s.breathiness * 4.0 * lp) + 0.01 * g(rng));
  }
  return x;
}

struct SyntheticCorpus {
  std::filesystem::path root;           // audio root
  std::filesystem::path manifest_path;
  CorpusManifest manifest;
  int sample_rate = 16000;
};

inline std::filesystem::path unique_temp_dir(const std::string& stem) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto dir = std::filesystem::temp_directory_path() /
             fmt::format("prosody_{}_{}_{}", stem, stamp, counter++);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Each speaker has an EN and an ES session (one mono WAV each, one track
/// each); pair i of a speaker is utterance i of both sessions. The ES
/// rendering shares most of the EN style with perturbations.
inline SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, int speakers,
                                              int pairs_per_speaker, std::uint64_t seed,
                                              int rate = 16000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  SyntheticCorpus corpus;
  corpus.root = dir;
  corpus.sample_rate = rate;
  std::filesystem::create_directories(dir / "audio");

  std::string manifest = std::string(kManifestHeader) + "\n";
  for (int s = 0; s < speakers; ++s) {
    const double base_f0 = 100.0 + 120.0 * u01(rng);
    std::vector<UtteranceStyle> en_styles, es_styles;
    for (int p = 0; p < pairs_per_speaker; ++p) {
      UtteranceStyle en;
      en.duration_s = 1.2 + 2.0 * u01(rng);
      en.f0_hz = base_f0 * std::exp2(0.1 * g(rng));
      en.f0_slope = 0.4 * g(rng);
      en.bump_pos = 0.2 + 0.6 * u01(rng);
      en.bump_octaves = 0.4 * u01(rng);
      en.syllable_rate = 3.5 + 2.5 * u01(rng);
      en.breathiness = 0.2 * u01(rng);
      en.loudness = 0.15 + 0.25 * u01(rng);
      en.final_rise = u01(rng) < 0.3 ? 0.4 : 0.0;
      UtteranceStyle es = en;
      es.duration_s = std::max(0.8, en.duration_s * (0.9 + 0.3 * u01(rng)));
      es.f0_slope += 0.15 * g(rng);
      es.bump_pos = std::clamp(en.bump_pos + 0.1 * g(rng), 0.1, 0.9);
      es.syllable_rate *= 1.0 + 0.1 * g(rng);
      es.breathiness = std::clamp(en.breathiness + 0.05 * g(rng), 0.0, 0.3);
      es.final_rise = u01(rng) < 0.5 ? en.final_rise : 0.0;
      en_styles.push_back(en);
      es_styles.push_back(es);
    }
    for (const Language lang : {Language::kEN, Language::kES}) {
      const auto& styles = lang == Language::kEN ? en_styles : es_styles;
      std::vector<double> audio;
      const auto pad = [&](double seconds) {
        const auto noise = white_noise(seconds, rate, 0.002, rng());
        audio.insert(audio.end(), noise.begin(), noise.end());
      };
      pad(0.4);
      const std::string conv = fmt::format("{}{:02d}", language_code(lang), s);
      const std::string file = fmt::format("audio/{}.wav", conv);
      for (int p = 0; p < pairs_per_speaker; ++p) {
        const double start = static_cast<double>(audio.size()) / rate;
        auto utt = render_utterance(styles[static_cast<std::size_t>(p)], rate, rng);
        audio.insert(audio.end(), utt.begin(), utt.end());
        const double end = static_cast<double>(audio.size()) / rate;
        pad(0.3 + 0.3 * u01(rng));
        const std::string pair_id = fmt::format("{:03d}_{}", s, p + 1);
        manifest += fmt::format("{}_{},{},{},spk{:02d},{},{},0,{:.4f},{:.4f}\n", language_code(lang),
                                pair_id, pair_id, language_code(lang), s, conv, file, start, end);
      }
      write_wav(dir / file, {audio}, rate);
    }
  }
  corpus.manifest_path = dir / "manifest.csv";
  std::ofstream(corpus.manifest_path) << manifest;
  corpus.manifest = load_manifest(corpus.manifest_path);
  return corpus;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace prosody::testing
