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

// Utterance-level prosody vectors: ten base features aggregated over ten
// proportional spans of each utterance, z-normalized per track.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "prosody/corpus.hpp"
#include "prosody/detail/stats.hpp"
#include "prosody/dsp_frames.hpp"
#include "prosody/error.hpp"

namespace prosody {

inline constexpr std::size_t kNumBaseFeatures = 10;
inline constexpr std::size_t kNumSpans = 10;
inline constexpr std::size_t kNumDims = kNumBaseFeatures * kNumSpans;

using FeatureArray = std::array<double, kNumDims>;

enum class BaseFeature : std::size_t {
  kIntensity = 0,
  kLengthening,
  kCreakiness,
  kSpeakingRate,
  kPitchHighness,
  kPitchLowness,
  kPitchWideness,
  kPitchNarrowness,
  kPeakDisalignment,
  kCpps,
};

inline constexpr std::array<std::string_view, kNumBaseFeatures> kBaseFeatureNames = {
    "intensity",      "lengthening",    "creakiness",       "speaking_rate",     "pitch_highness",
    "pitch_lowness",  "pitch_wideness", "pitch_narrowness", "peak_disalignment", "cpps"};

/// Fractional span edges; span i is [edge[i], edge[i+1]), the last one closed.
inline constexpr std::array<double, kNumSpans + 1> kSpanEdges = {
    0.0, 0.05, 0.10, 0.20, 0.30, 0.50, 0.70, 0.80, 0.90, 0.95, 1.0};

inline constexpr std::array<std::string_view, kNumSpans> kSpanLabels = {
    "p0_5", "p5_10", "p10_20", "p20_30", "p30_50", "p50_70", "p70_80", "p80_90", "p90_95", "p95_100"};

constexpr std::size_t feature_index(BaseFeature f, std::size_t span) {
  return static_cast<std::size_t>(f) * kNumSpans + span;
}

/// Canonical label `<feature>_p<lo>_<hi>`; index = feature * 10 + span.
inline std::string feature_label(std::size_t index) {
  if (index >= kNumDims) {
    throw std::out_of_range(fmt::format("feature index {} out of range [0, {})", index, kNumDims));
  }
  return fmt::format("{}_{}", kBaseFeatureNames[index / kNumSpans], kSpanLabels[index % kNumSpans]);
}

/// Span containing a fractional position in [0, 1].
inline std::size_t span_of_fraction(double frac) {
  for (std::size_t s = kNumSpans; s-- > 0;) {
    if (frac >= kSpanEdges[s]) return s;
  }
  return 0;
}

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Span intervals in seconds from the utterance start.
inline std::array<TimeInterval, kNumSpans> span_boundaries(double duration_s) {
  if (!(duration_s >= kMinUtteranceSeconds)) {
    throw DataError(fmt::format("utterance duration {} s below the {} s minimum", duration_s,
                                kMinUtteranceSeconds));
  }
  std::array<TimeInterval, kNumSpans> out;
  for (std::size_t s = 0; s < kNumSpans; ++s) {
    out[s] = {kSpanEdges[s] * duration_s, kSpanEdges[s + 1] * duration_s};
  }
  return out;
}

struct RawProsodyVector {
  std::string utterance_id;
  std::string track_id;
  FeatureArray values{};
};

struct ProsodyVector {
  std::string utterance_id;
  std::string track_id;
  FeatureArray values{};
  /// Normalized with corpus-level moments (single-utterance track).
  bool corpus_fallback = false;
};

// ---------------------------------------------------------------------------
// Track-level references

/// 300 ms pitch-range window centered on a frame; grid hop 100 ms.
struct PitchRangeWindow {
  std::size_t center = 0;
  double range = 0.0;  // max - min pitch_z over voiced frames
};

inline constexpr std::size_t kRangeWindowFrames = 30;
inline constexpr std::size_t kRangeWindowHop = 10;
inline constexpr std::size_t kPeakSearchFrames = 20;  // +-200 ms
inline constexpr double kPeakDelayScaleS = 0.2;

struct TrackReference {
  double flux_ref = 0.0;      // median spectral flux over speech frames
  double median_f0_hz = 0.0;  // median F0 over voiced frames
  double range_ref = 0.0;     // median range over qualifying pitch windows
};

/// A normalized series plus the track-level quantities the base features
/// compare against. Holds a pointer to the series, which must outlive it.
struct TrackFeatures {
  const NormalizedFrameSeries* series = nullptr;
  TrackReference ref;
  std::vector<std::uint8_t> pitch_peak;  // local maxima of pitch_z
  std::vector<PitchRangeWindow> range_windows;  // sorted by center
};

namespace detail {

inline std::vector<PitchRangeWindow> pitch_range_windows(const NormalizedFrameSeries& nfs) {
  std::vector<PitchRangeWindow> out;
  const std::size_t n = nfs.size();
  for (std::size_t start = 0; start + kRangeWindowFrames <= n; start += kRangeWindowHop) {
    std::size_t voiced = 0;
    double lo = 0.0, hi = 0.0;
    for (std::size_t t = start; t < start + kRangeWindowFrames; ++t) {
      if (!nfs.voiced(t)) continue;
      const double z = *nfs.pitch_z[t];
      if (voiced == 0) lo = hi = z;
      lo = std::min(lo, z);
      hi = std::max(hi, z);
      ++voiced;
    }
    if (2 * voiced >= kRangeWindowFrames) {
      out.push_back({start + kRangeWindowFrames / 2, hi - lo});
    }
  }
  return out;
}

inline std::vector<std::uint8_t> pitch_peaks(const NormalizedFrameSeries& nfs) {
  const std::size_t n = nfs.size();
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    if (!nfs.voiced(t)) continue;
    const double z = *nfs.pitch_z[t];
    const bool left = t > 0 && nfs.voiced(t - 1);
    const bool right = t + 1 < n && nfs.voiced(t + 1);
    if (!left && !right) continue;
    if (left && !(z > *nfs.pitch_z[t - 1])) continue;
    if (right && !(z >= *nfs.pitch_z[t + 1])) continue;
    out[t] = 1;
  }
  return out;
}

}  // namespace detail

/// Prepares several series that share one set of references (pooled).
inline std::vector<TrackFeatures> prepare_tracks(std::span<const NormalizedFrameSeries> group) {
  std::vector<double> flux, f0, ranges;
  std::vector<TrackFeatures> out;
  out.reserve(group.size());
  for (const auto& nfs : group) {
    const auto& fs = nfs.frames;
    for (std::size_t t = 0; t < nfs.size(); ++t) {
      if (nfs.speech_mask[t]) flux.push_back(fs.spectral_flux[t]);
      if (fs.voiced(t)) f0.push_back(*fs.f0_hz[t]);
    }
    TrackFeatures tf;
    tf.series = &nfs;
    tf.pitch_peak = detail::pitch_peaks(nfs);
    tf.range_windows = detail::pitch_range_windows(nfs);
    for (const auto& w : tf.range_windows) ranges.push_back(w.range);
    out.push_back(std::move(tf));
  }
  const TrackReference ref{detail::median(flux), detail::median(f0), detail::median(ranges)};
  for (auto& tf : out) tf.ref = ref;
  return out;
}

inline TrackFeatures prepare_track(const NormalizedFrameSeries& nfs) {
  return std::move(prepare_tracks(std::span(&nfs, 1)).front());
}

// ---------------------------------------------------------------------------
// Utterance raw vectors

/// Frames of an utterance grouped by span. A frame belongs to the span holding
/// its center time. A span with no frame center (possible only where the
/// utterance touches a track edge) borrows the frame nearest its midpoint;
/// `borrowed` marks those.
struct SpanFrames {
  std::array<std::vector<std::size_t>, kNumSpans> frames;
  std::array<bool, kNumSpans> borrowed{};
  std::size_t own_frames = 0;
};

inline SpanFrames assign_span_frames(const FrameGrid& grid, const UtteranceRecord& rec) {
  const auto bounds = span_boundaries(rec.duration_s());
  if (grid.num_frames == 0) {
    throw DataError(fmt::format("utterance {}: track has no frames", rec.utterance_id));
  }
  const double track_end = grid.frame_start_s(grid.num_frames - 1) +
                           static_cast<double>(grid.window) / grid.sample_rate;
  // Samples after the last full window (less than one hop) carry no frame.
  if (rec.end_s > track_end + kFramePeriodS) {
    throw DataError(fmt::format("utterance {} ends at {} s, beyond the track's frames",
                                rec.utterance_id, rec.end_s));
  }

  const double rate = grid.sample_rate;
  const double hop = static_cast<double>(grid.hop);
  const double half_win = 0.5 * static_cast<double>(grid.window);
  // First frame with center >= start.
  double guess = std::ceil((rec.start_s * rate - half_win) / hop);
  std::size_t t = guess > 0 ? static_cast<std::size_t>(guess) : 0;
  while (t > 0 && grid.frame_center_s(t - 1) >= rec.start_s) --t;
  while (t < grid.num_frames && grid.frame_center_s(t) < rec.start_s) ++t;

  SpanFrames out;
  const double dur = rec.duration_s();
  for (; t < grid.num_frames; ++t) {
    const double c = grid.frame_center_s(t);
    if (c > rec.end_s) break;
    const double frac = std::min((c - rec.start_s) / dur, 1.0);
    out.frames[span_of_fraction(frac)].push_back(t);
    ++out.own_frames;
  }

  for (std::size_t s = 0; s < kNumSpans; ++s) {
    if (!out.frames[s].empty()) continue;
    const double mid = rec.start_s + 0.5 * (bounds[s].start_s + bounds[s].end_s);
    double idx = std::round((mid * rate - half_win) / hop);
    idx = std::clamp(idx, 0.0, static_cast<double>(grid.num_frames - 1));
    out.frames[s].push_back(static_cast<std::size_t>(idx));
    out.borrowed[s] = true;
  }
  return out;
}

namespace detail {

template <typename F>
double mean_over(const std::vector<std::size_t>& frames, F&& value) {
  if (frames.empty()) return 0.0;
  double s = 0.0;
  for (const auto t : frames) s += value(t);
  return s / static_cast<double>(frames.size());
}

/// Mean of `value` over the speech frames of the span; 0 if there are none.
template <typename F>
double mean_over_speech(const NormalizedFrameSeries& nfs, const std::vector<std::size_t>& frames,
                        F&& value) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto t : frames) {
    if (!nfs.speech_mask[t]) continue;
    s += value(t);
    ++n;
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

inline double creak_score(const NormalizedFrameSeries& nfs, const TrackReference& ref,
                          std::size_t t) {
  const auto& fs = nfs.frames;
  double score = 0.0;
  if (fs.voiced(t) && *fs.f0_hz[t] < 0.6 * ref.median_f0_hz) score += 0.4;
  if (fs.voicing[t] >= 0.25 && fs.voicing[t] < 0.45) score += 0.3;
  if (fs.voiced(t) && t > 0 && fs.voiced(t - 1)) {
    const double f0 = *fs.f0_hz[t];
    if (std::abs(f0 - *fs.f0_hz[t - 1]) / f0 > 0.05) score += 0.3;
  }
  return std::clamp(score, 0.0, 1.0);
}

/// Delay in frames from an envelope peak to the nearest pitch peak within
/// +-200 ms (ties go to the later one); nullopt if there is none.
inline std::optional<std::ptrdiff_t> nearest_pitch_peak(const TrackFeatures& tf, std::size_t p) {
  const auto n = static_cast<std::ptrdiff_t>(tf.pitch_peak.size());
  const auto pos = static_cast<std::ptrdiff_t>(p);
  const auto reach = static_cast<std::ptrdiff_t>(kPeakSearchFrames);
  for (std::ptrdiff_t d = 0; d <= reach; ++d) {
    if (pos + d < n && tf.pitch_peak[static_cast<std::size_t>(pos + d)]) return d;
    if (d > 0 && pos - d >= 0 && tf.pitch_peak[static_cast<std::size_t>(pos - d)]) return -d;
  }
  return std::nullopt;
}

}  // namespace detail

inline RawProsodyVector utterance_raw_vector(const TrackFeatures& tf, const UtteranceRecord& rec) {
  const NormalizedFrameSeries& nfs = *tf.series;
  const FrameSeries& fs = nfs.frames;
  const TrackReference& ref = tf.ref;
  const SpanFrames spans = assign_span_frames(fs.grid, rec);
  const double frame_s = static_cast<double>(fs.grid.hop) / fs.grid.sample_rate;

  RawProsodyVector out;
  out.utterance_id = rec.utterance_id;
  out.track_id = fs.track_id;

  for (std::size_t s = 0; s < kNumSpans; ++s) {
    const auto& frames = spans.frames[s];
    if (frames.empty()) {
      throw DataError(fmt::format("utterance {}: span {} has no frames", rec.utterance_id, s));
    }
    const auto set = [&](BaseFeature f, double v) { out.values[feature_index(f, s)] = v; };

    set(BaseFeature::kIntensity, detail::mean_over(frames, [&](auto t) { return nfs.energy_z[t]; }));
    set(BaseFeature::kSpeakingRate, detail::mean_over(frames, [&](auto t) { return nfs.rate_z[t]; }));
    set(BaseFeature::kCpps,
        detail::mean_over_speech(nfs, frames, [&](auto t) { return nfs.cpps_z[t]; }));
    set(BaseFeature::kLengthening, ref.flux_ref > 0.0
                                       ? detail::mean_over_speech(nfs, frames, [&](auto t) {
                                           return std::max(0.0, 1.0 - fs.spectral_flux[t] / ref.flux_ref);
                                         })
                                       : 0.0);
    set(BaseFeature::kCreakiness,
        detail::mean_over(frames, [&](auto t) { return detail::creak_score(nfs, ref, t); }));
    set(BaseFeature::kPitchHighness, detail::mean_over(frames, [&](auto t) {
          return nfs.voiced(t) ? std::max(0.0, *nfs.pitch_z[t]) : 0.0;
        }));
    set(BaseFeature::kPitchLowness, detail::mean_over(frames, [&](auto t) {
          return nfs.voiced(t) ? std::max(0.0, -*nfs.pitch_z[t]) : 0.0;
        }));

    // Range windows whose center falls inside the span.
    double wide = 0.0, narrow = 0.0;
    if (ref.range_ref > 0.0) {
      const std::size_t lo = frames.front();
      const std::size_t hi = frames.back();
      const auto first = std::lower_bound(
          tf.range_windows.begin(), tf.range_windows.end(), lo,
          [](const PitchRangeWindow& w, std::size_t v) { return w.center < v; });
      std::size_t count = 0;
      for (auto it = first; it != tf.range_windows.end() && it->center <= hi; ++it) {
        wide += std::max(0.0, it->range - ref.range_ref) / ref.range_ref;
        narrow += std::max(0.0, ref.range_ref - it->range) / ref.range_ref;
        ++count;
      }
      if (count > 0) {
        wide /= static_cast<double>(count);
        narrow /= static_cast<double>(count);
      }
    }
    set(BaseFeature::kPitchWideness, wide);
    set(BaseFeature::kPitchNarrowness, narrow);

    double late = 0.0;
    std::size_t peaks = 0;
    for (const auto t : frames) {
      if (!fs.syllable_peak[t]) continue;
      ++peaks;
      if (const auto d = detail::nearest_pitch_peak(tf, t); d && *d > 0) {
        late += static_cast<double>(*d) * frame_s / kPeakDelayScaleS;
      }
    }
    set(BaseFeature::kPeakDisalignment, peaks == 0 ? 0.0 : late / static_cast<double>(peaks));
  }

  for (const double v : out.values) {
    if (!std::isfinite(v)) {
      throw DataError(fmt::format("utterance {}: non-finite feature value", rec.utterance_id));
    }
  }
  return out;
}

inline RawProsodyVector utterance_raw_vector(const NormalizedFrameSeries& nfs,
                                             const UtteranceRecord& rec) {
  return utterance_raw_vector(prepare_track(nfs), rec);
}

// ---------------------------------------------------------------------------
// Per-track z-normalization of the 100 dimensions

using DimensionMoments = std::array<detail::Moments, kNumDims>;

inline DimensionMoments dimension_moments(std::span<const RawProsodyVector> raws) {
  DimensionMoments m;
  std::vector<double> column(raws.size());
  for (std::size_t d = 0; d < kNumDims; ++d) {
    for (std::size_t i = 0; i < raws.size(); ++i) column[i] = raws[i].values[d];
    m[d] = detail::moments_of(column, [](std::size_t) { return true; });
  }
  return m;
}

struct TrackNormalization {
  std::vector<ProsodyVector> vectors;
  bool corpus_fallback = false;
  std::vector<std::size_t> zero_variance_dims;
};

/// Z-scores each dimension across one track's utterances (population std).
/// A single-utterance track uses `corpus` moments instead when given; without
/// them its values are 0. Zero-variance dimensions map to 0 and are listed.
inline TrackNormalization znormalize_track(std::span<const RawProsodyVector> raws,
                                           const DimensionMoments* corpus = nullptr) {
  TrackNormalization out;
  if (raws.empty()) return out;
  DimensionMoments m;
  if (raws.size() == 1) {
    out.corpus_fallback = true;
    if (corpus != nullptr) m = *corpus;
  } else {
    m = dimension_moments(raws);
  }
  for (std::size_t d = 0; d < kNumDims; ++d) {
    if (m[d].degenerate()) out.zero_variance_dims.push_back(d);
  }
  out.vectors.reserve(raws.size());
  for (const auto& r : raws) {
    ProsodyVector v{r.utterance_id, r.track_id, {}, out.corpus_fallback};
    for (std::size_t d = 0; d < kNumDims; ++d) v.values[d] = m[d].z(r.values[d]);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature CSV

inline std::string feature_csv_header() {
  std::string h = "utterance_id,track_id";
  for (std::size_t d = 0; d < kNumDims; ++d) h += "," + feature_label(d);
  return h;
}

inline void write_feature_csv(std::ostream& out, std::span<const ProsodyVector> vectors) {
  out << feature_csv_header() << '\n';
  for (const auto& v : vectors) {
    std::string line = fmt::format("{},{}", v.utterance_id, v.track_id);
    for (const double x : v.values) line += fmt::format(",{}", x);
    out << line << '\n';
  }
}

inline std::vector<ProsodyVector> read_feature_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || detail::chomp(line) != feature_csv_header()) {
    throw DataError(fmt::format("{}: missing or malformed feature CSV header", source));
  }
  std::vector<ProsodyVector> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_csv_line(text);
    if (f.size() != kNumDims + 2) {
      throw DataError(fmt::format("{}:{}: expected {} fields, found {}", source, line_no,
                                  kNumDims + 2, f.size()));
    }
    ProsodyVector v;
    v.utterance_id = f[0];
    v.track_id = f[1];
    for (std::size_t d = 0; d < kNumDims; ++d) {
      const auto x = detail::parse_number<double>(f[d + 2]);
      if (!x || !std::isfinite(*x)) {
        throw DataError(fmt::format("{}:{}: bad value '{}' for {}", source, line_no, f[d + 2],
                                    feature_label(d)));
      }
      v.values[d] = *x;
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<ProsodyVector> load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open feature file {}", path.string()));
  return read_feature_csv(in, path.string());
}

}  // namespace prosody
