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

// Corpus manifest ingestion and utterance slicing.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/core.h>

#include "prosody/audio.hpp"
#include "prosody/error.hpp"

namespace prosody {

enum class Language { kEN, kES };

inline std::string_view language_code(Language lang) {
  return lang == Language::kEN ? "EN" : "ES";
}

inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "EN" || s == "en") return Language::kEN;
  if (s == "ES" || s == "es") return Language::kES;
  return std::nullopt;
}

inline Language other_language(Language lang) {
  return lang == Language::kEN ? Language::kES : Language::kEN;
}

/// Utterances shorter than this are rejected; it guarantees frames in every span.
inline constexpr double kMinUtteranceSeconds = 0.5;

inline constexpr std::string_view kManifestHeader =
    "utterance_id,pair_id,language,speaker_id,conversation_id,audio_path,channel,start_s,end_s";

struct UtteranceRecord {
  std::string utterance_id;
  std::string pair_id;
  Language language = Language::kEN;
  std::string speaker_id;
  std::string conversation_id;
  std::string audio_path;  // relative to the audio root
  int channel = 0;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const { return end_s - start_s; }

  /// Identifier of the (conversation, speaker, channel) track this utterance
  /// belongs to.
  std::string track_id() const {
    return fmt::format("{}:{}:{}", conversation_id, speaker_id, channel);
  }

  bool operator==(const UtteranceRecord&) const = default;
};

struct MatchedPair {
  std::string pair_id;
  UtteranceRecord en;
  UtteranceRecord es;

  const UtteranceRecord& member(Language lang) const {
    return lang == Language::kEN ? en : es;
  }

  bool operator==(const MatchedPair&) const = default;
};

struct CorpusStats {
  std::size_t utterances = 0;
  std::size_t pairs = 0;
  std::size_t speakers = 0;

  bool operator==(const CorpusStats&) const = default;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;  // manifest order
  std::vector<MatchedPair> pairs;        // order of first appearance of pair_id
  CorpusStats stats;
  std::vector<std::string> rejected;  // non-strict loads: dropped rows, with reasons

  const UtteranceRecord* find(std::string_view utterance_id) const {
    for (const auto& r : records) {
      if (r.utterance_id == utterance_id) return &r;
    }
    return nullptr;
  }

  bool operator==(const CorpusManifest&) const = default;
};

struct ManifestOptions {
  /// Fail the whole load on a too-short utterance instead of dropping its pair.
  bool strict = false;
};

namespace detail {

/// Splits one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string_view chomp(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

/// Parses and validates manifest CSV text. `source` names the input in errors.
inline CorpusManifest parse_manifest(std::istream& in, const std::string& source,
                                     const ManifestOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty manifest", source));
  std::string_view header = detail::chomp(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kManifestHeader) {
    throw DataError(fmt::format("{}: bad header, expected '{}'", source, kManifestHeader));
  }

  std::vector<UtteranceRecord> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_csv_line(text);
    const auto bad = [&](const std::string& why) {
      return DataError(fmt::format("{}:{}: malformed row: {}", source, line_no, why));
    };
    if (f.size() != 9) throw bad(fmt::format("expected 9 fields, found {}", f.size()));
    UtteranceRecord r;
    r.utterance_id = f[0];
    r.pair_id = f[1];
    const auto lang = parse_language(f[2]);
    if (!lang) throw bad(fmt::format("language '{}' is not EN or ES", f[2]));
    r.language = *lang;
    r.speaker_id = f[3];
    r.conversation_id = f[4];
    r.audio_path = f[5];
    const auto channel = detail::parse_number<int>(f[6]);
    const auto start = detail::parse_number<double>(f[7]);
    const auto end = detail::parse_number<double>(f[8]);
    if (!channel || *channel < 0) throw bad(fmt::format("channel '{}'", f[6]));
    if (!start || !std::isfinite(*start) || *start < 0) throw bad(fmt::format("start_s '{}'", f[7]));
    if (!end || !std::isfinite(*end) || *end <= *start) throw bad(fmt::format("end_s '{}'", f[8]));
    r.channel = *channel;
    r.start_s = *start;
    r.end_s = *end;
    if (r.utterance_id.empty() || r.pair_id.empty()) throw bad("empty utterance_id or pair_id");
    if (!r.utterance_id.starts_with(language_code(r.language))) {
      throw bad(fmt::format("utterance_id '{}' does not carry language prefix {}",
                            r.utterance_id, language_code(r.language)));
    }
    rows.push_back(std::move(r));
    line_numbers.push_back(line_no);
  }

  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!seen.insert(rows[i].utterance_id).second) {
      throw DataError(fmt::format("{}:{}: duplicate utterance_id {}", source, line_numbers[i],
                                  rows[i].utterance_id));
    }
  }

  // Utterances of one track must all point at the same audio file.
  std::map<std::string, std::string> track_paths;
  for (const auto& r : rows) {
    const auto [it, inserted] = track_paths.emplace(r.track_id(), r.audio_path);
    if (!inserted && it->second != r.audio_path) {
      throw DataError(fmt::format("{}: track {} refers to two audio files ({}, {})", source,
                                  r.track_id(), it->second, r.audio_path));
    }
  }

  // Group by pair_id in order of first appearance.
  std::vector<std::string> pair_order;
  std::unordered_map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& m = members[rows[i].pair_id];
    if (m.empty()) pair_order.push_back(rows[i].pair_id);
    m.push_back(i);
  }

  CorpusManifest manifest;
  std::set<std::size_t> dropped;
  for (const auto& pid : pair_order) {
    const auto& idx = members[pid];
    if (idx.size() != 2) {
      throw DataError(fmt::format("{}: pair {} has {} members, expected 2", source, pid,
                                  idx.size()));
    }
    if (rows[idx[0]].language == rows[idx[1]].language) {
      throw DataError(fmt::format("{}: pair {} has two {} members", source, pid,
                                  language_code(rows[idx[0]].language)));
    }
    bool too_short = false;
    for (const auto i : idx) {
      if (rows[i].duration_s() < kMinUtteranceSeconds) {
        const auto msg = fmt::format("{}:{}: utterance {} is {:.3f} s, shorter than {} s", source,
                                     line_numbers[i], rows[i].utterance_id, rows[i].duration_s(),
                                     kMinUtteranceSeconds);
        if (options.strict) throw DataError(msg);
        manifest.rejected.push_back(msg + fmt::format(" (pair {} dropped)", pid));
        too_short = true;
      }
    }
    if (too_short) {
      dropped.insert(idx.begin(), idx.end());
      continue;
    }
    MatchedPair p;
    p.pair_id = pid;
    const bool first_en = rows[idx[0]].language == Language::kEN;
    p.en = rows[first_en ? idx[0] : idx[1]];
    p.es = rows[first_en ? idx[1] : idx[0]];
    manifest.pairs.push_back(std::move(p));
  }

  std::set<std::string> speakers;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (dropped.count(i)) continue;
    speakers.insert(rows[i].speaker_id);
    manifest.records.push_back(std::move(rows[i]));
  }
  manifest.stats = {manifest.records.size(), manifest.pairs.size(), speakers.size()};
  return manifest;
}

inline CorpusManifest parse_manifest(const std::string& text, const ManifestOptions& options = {}) {
  std::istringstream in(text);
  return parse_manifest(in, "<manifest>", options);
}

inline CorpusManifest load_manifest(const std::filesystem::path& path,
                                    const ManifestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open manifest {}", path.string()));
  return parse_manifest(in, path.string(), options);
}

/// Half-open sample range [begin, end).
struct SampleInterval {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const SampleInterval&) const = default;
};

inline SampleInterval slice_utterance(const AudioTrack& track, const UtteranceRecord& rec) {
  const double rate = track.sample_rate;
  const auto begin = std::llround(rec.start_s * rate);
  const auto end = std::llround(rec.end_s * rate);
  if (begin < 0 || end <= begin || static_cast<std::size_t>(end) > track.samples.size()) {
    throw DataError(fmt::format(
        "utterance {} [{}, {}) s exceeds track {} ({:.3f} s)", rec.utterance_id, rec.start_s,
        rec.end_s, track.track_id, track.duration_s()));
  }
  return {static_cast<std::size_t>(begin), static_cast<std::size_t>(end)};
}

/// Records grouped by track, tracks in order of first appearance.
struct TrackGroup {
  std::string track_id;
  std::string audio_path;
  int channel = 0;
  std::vector<std::size_t> record_indices;  // into CorpusManifest::records
};

inline std::vector<TrackGroup> group_by_track(const std::vector<UtteranceRecord>& records) {
  std::vector<TrackGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto id = r.track_id();
    auto [it, inserted] = index.emplace(id, groups.size());
    if (inserted) groups.push_back({id, r.audio_path, r.channel, {}});
    groups[it->second].record_indices.push_back(i);
  }
  return groups;
}

}  // namespace prosody
