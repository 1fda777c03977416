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

// End-to-end extraction: manifest + audio -> per-track normalized prosody
// vectors, optionally across worker threads.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "prosody/audio.hpp"
#include "prosody/corpus.hpp"
#include "prosody/dsp_frames.hpp"
#include "prosody/error.hpp"
#include "prosody/midlevel.hpp"

namespace prosody {

/// Raw vectors for the given utterances of one track, in the given order.
/// Frame-level warnings are appended to `warnings`.
inline std::vector<RawProsodyVector> track_raw_vectors(const AudioTrack& track,
                                                       std::span<const UtteranceRecord> records,
                                                       std::vector<std::string>& warnings,
                                                       FrameSeries* frames_out = nullptr) {
  for (const auto& r : records) slice_utterance(track, r);  // range check
  FrameSeries fs = compute_frame_series(track);
  if (frames_out != nullptr) *frames_out = fs;
  const NormalizedFrameSeries nfs = normalize_frame_series(std::move(fs));
  warnings.insert(warnings.end(), nfs.warnings.begin(), nfs.warnings.end());
  const TrackFeatures tf = prepare_track(nfs);
  std::vector<RawProsodyVector> raws;
  raws.reserve(records.size());
  for (const auto& r : records) raws.push_back(utterance_raw_vector(tf, r));
  return raws;
}

/// Runs `work(i)` for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown after all workers finish, lowest index first.
template <typename Work>
void parallel_for(std::size_t count, unsigned jobs, Work&& work) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ExtractOptions {
  std::filesystem::path audio_root;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> dump_frames_dir;
};

struct ExtractResult {
  std::vector<ProsodyVector> vectors;  // manifest record order
  std::vector<std::string> warnings;
};

inline std::string file_safe(std::string s) {
  for (auto& c : s) {
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return s;
}

/// Output is identical for any `jobs` value.
inline ExtractResult extract_features(const CorpusManifest& manifest, const ExtractOptions& options) {
  const auto groups = group_by_track(manifest.records);
  struct TrackOutput {
    std::vector<RawProsodyVector> raws;
    std::vector<std::string> warnings;
  };
  std::vector<TrackOutput> outputs(groups.size());

  if (options.dump_frames_dir) std::filesystem::create_directories(*options.dump_frames_dir);

  parallel_for(groups.size(), options.jobs, [&](std::size_t g) {
    const auto& group = groups[g];
    const AudioTrack track =
        read_track(options.audio_root / group.audio_path, group.channel, group.track_id);
    std::vector<UtteranceRecord> records;
    for (const auto i : group.record_indices) records.push_back(manifest.records[i]);
    FrameSeries frames;
    outputs[g].raws = track_raw_vectors(track, records, outputs[g].warnings,
                                        options.dump_frames_dir ? &frames : nullptr);
    if (options.dump_frames_dir) {
      const auto path = *options.dump_frames_dir / (file_safe(group.track_id) + ".csv");
      std::ofstream out(path);
      if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
      write_frame_csv(out, frames);
    }
  });

  std::vector<RawProsodyVector> all;
  for (const auto& o : outputs) all.insert(all.end(), o.raws.begin(), o.raws.end());
  const DimensionMoments corpus = dimension_moments(all);

  ExtractResult result;
  result.vectors.resize(manifest.records.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    result.warnings.insert(result.warnings.end(), outputs[g].warnings.begin(),
                           outputs[g].warnings.end());
    const auto norm = znormalize_track(outputs[g].raws, &corpus);
    if (norm.corpus_fallback) {
      result.warnings.push_back(fmt::format(
          "track {}: single utterance, normalized with corpus-level moments", groups[g].track_id));
    } else if (!norm.zero_variance_dims.empty()) {
      result.warnings.push_back(fmt::format("track {}: {} zero-variance dimension(s) set to 0",
                                            groups[g].track_id, norm.zero_variance_dims.size()));
    }
    for (std::size_t k = 0; k < norm.vectors.size(); ++k) {
      result.vectors[groups[g].record_indices[k]] = norm.vectors[k];
    }
  }
  return result;
}

/// A set of audio files rendered by one voice (e.g. a synthesizer), each file
/// one whole utterance. All files are normalized together as one track.
struct VoiceUtterance {
  std::string utterance_id;
  AudioTrack audio;
};

inline TrackNormalization voice_group_vectors(std::span<const VoiceUtterance> utterances,
                                              const std::string& voice_name,
                                              std::vector<std::string>& warnings) {
  std::vector<FrameSeries> series;
  series.reserve(utterances.size());
  for (const auto& u : utterances) {
    if (u.audio.duration_s() < kMinUtteranceSeconds) {
      throw DataError(fmt::format("{}: {:.3f} s of audio, shorter than {} s", u.utterance_id,
                                  u.audio.duration_s(), kMinUtteranceSeconds));
    }
    series.push_back(compute_frame_series(u.audio));
    series.back().track_id = voice_name;
  }
  const auto normalized = normalize_frame_group(std::move(series), voice_name);
  if (!normalized.empty()) {
    warnings.insert(warnings.end(), normalized.front().warnings.begin(),
                    normalized.front().warnings.end());
  }
  const auto prepared = prepare_tracks(normalized);
  std::vector<RawProsodyVector> raws;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    UtteranceRecord rec;
    rec.utterance_id = utterances[i].utterance_id;
    rec.start_s = 0.0;
    rec.end_s = utterances[i].audio.duration_s();
    raws.push_back(utterance_raw_vector(prepared[i], rec));
  }
  auto norm = znormalize_track(raws);
  if (norm.corpus_fallback) {
    warnings.push_back(fmt::format("{}: single utterance; values set to 0", voice_name));
  }
  return norm;
}

}  // namespace prosody
