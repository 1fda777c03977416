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

// Frame-level feature extraction over whole tracks: pitch and voicing,
// log energy, spectral flux, raw CPPS, and a syllable-rate envelope, plus
// per-track normalization of the designated channels.
//
// All extractors share one frame grid: frame t starts at sample t * hop and
// spans the 40 ms analysis window. Shorter analysis windows are centered
// inside it.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "prosody/audio.hpp"
#include "prosody/error.hpp"
#include "prosody/detail/fft.hpp"
#include "prosody/detail/stats.hpp"

namespace prosody {

inline constexpr double kFramePeriodS = 0.010;
inline constexpr double kAnalysisWindowS = 0.040;
inline constexpr double kShortWindowS = 0.032;
inline constexpr double kMinF0Hz = 60.0;
inline constexpr double kMaxF0Hz = 400.0;

struct FrameGrid {
  int sample_rate = 0;
  std::size_t hop = 0;     // samples per frame period
  std::size_t window = 0;  // samples per analysis window
  std::size_t num_frames = 0;

  double frame_start_s(std::size_t t) const {
    return static_cast<double>(t * hop) / sample_rate;
  }
  double frame_center_s(std::size_t t) const {
    return (static_cast<double>(t * hop) + 0.5 * static_cast<double>(window)) / sample_rate;
  }
};

/// floor((N - window) / hop) + 1 frames, or none if the track is shorter than
/// one window.
inline FrameGrid make_frame_grid(std::size_t num_samples, int sample_rate) {
  FrameGrid g;
  g.sample_rate = sample_rate;
  g.hop = static_cast<std::size_t>(std::lround(kFramePeriodS * sample_rate));
  g.window = static_cast<std::size_t>(std::lround(kAnalysisWindowS * sample_rate));
  g.num_frames = num_samples >= g.window ? (num_samples - g.window) / g.hop + 1 : 0;
  return g;
}

// ---------------------------------------------------------------------------
// Pitch

struct PitchOptions {
  double min_f0_hz = kMinF0Hz;
  double max_f0_hz = kMaxF0Hz;
  double voicing_threshold = 0.45;
  /// Score deducted per octave of lag above the shortest candidate lag.
  double octave_cost = 0.01;
  /// Candidates above this multiple of the running median F0 are penalized.
  double jump_ratio = 1.6;
  double jump_penalty = 0.2;
  std::size_t history_frames = 10;
  /// An unvoiced run this long clears the running median.
  std::size_t history_reset_frames = 50;
};

struct PitchTrack {
  std::vector<std::optional<double>> f0_hz;  // absent when unvoiced
  std::vector<double> voicing;               // best normalized autocorrelation peak, [0, 1]
};

/// Per-frame F0 by normalized autocorrelation over the 40 ms window.
inline PitchTrack track_pitch(const AudioTrack& track, const PitchOptions& opt = {}) {
  const FrameGrid grid = make_frame_grid(track.samples.size(), track.sample_rate);
  const double rate = track.sample_rate;
  const std::size_t win = grid.window;
  const auto lag_min = static_cast<std::size_t>(std::ceil(rate / opt.max_f0_hz));
  const auto lag_max =
      std::min(static_cast<std::size_t>(std::floor(rate / opt.min_f0_hz)), win - 2);

  PitchTrack out;
  out.f0_hz.assign(grid.num_frames, std::nullopt);
  out.voicing.assign(grid.num_frames, 0.0);
  if (grid.num_frames == 0) return out;

  detail::RealFft fft(detail::next_pow2(win + lag_max + 2));
  std::vector<double> buf(fft.size());
  std::vector<std::complex<double>> spec;
  std::vector<double> ac;
  std::vector<double> energy_prefix(win + 1);
  std::vector<double> r(lag_max + 2);
  std::deque<double> history;
  std::size_t unvoiced_run = 0;

  for (std::size_t t = 0; t < grid.num_frames; ++t) {
    const double* x = track.samples.data() + t * grid.hop;
    double mean = 0.0;
    for (std::size_t n = 0; n < win; ++n) mean += x[n];
    mean /= static_cast<double>(win);
    std::fill(buf.begin(), buf.end(), 0.0);
    energy_prefix[0] = 0.0;
    for (std::size_t n = 0; n < win; ++n) {
      buf[n] = x[n] - mean;
      energy_prefix[n + 1] = energy_prefix[n] + buf[n] * buf[n];
    }
    fft.forward(buf, spec);
    for (auto& c : spec) c = std::norm(c);
    fft.inverse(spec, ac);

    for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      const double head = energy_prefix[win - lag];
      const double tail = energy_prefix[win] - energy_prefix[lag];
      const double den = head * tail;
      r[lag] = den > 0.0 ? std::clamp(ac[lag] / std::sqrt(den), -1.0, 1.0) : 0.0;
    }

    double running_median = 0.0;
    if (history.size() >= 3) {
      running_median = detail::median(std::vector<double>(history.begin(), history.end()));
    }

    bool found = false;
    double best_score = 0.0;
    double best_height = 0.0;
    double best_f0 = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      const double a = r[lag - 1];
      const double b = r[lag];
      const double c = r[lag + 1];
      if (!(b > a && b >= c && b > 0.0)) continue;
      const double curvature = a - 2.0 * b + c;
      double shift = curvature < 0.0 ? 0.5 * (a - c) / curvature : 0.0;
      shift = std::clamp(shift, -0.5, 0.5);
      const double height = b - 0.25 * (a - c) * shift;
      const double refined_lag = static_cast<double>(lag) + shift;
      const double f0 = rate / refined_lag;
      double score = height - opt.octave_cost * std::log2(refined_lag / static_cast<double>(lag_min));
      if (running_median > 0.0 && f0 > opt.jump_ratio * running_median) score -= opt.jump_penalty;
      if (!found || score > best_score) {
        found = true;
        best_score = score;
        best_height = height;
        best_f0 = f0;
      }
    }

    const double voicing = found ? std::clamp(best_height, 0.0, 1.0) : 0.0;
    out.voicing[t] = voicing;
    if (found && voicing >= opt.voicing_threshold) {
      const double f0 = std::clamp(best_f0, opt.min_f0_hz, opt.max_f0_hz);
      out.f0_hz[t] = f0;
      history.push_back(f0);
      if (history.size() > opt.history_frames) history.pop_front();
      unvoiced_run = 0;
    } else if (++unvoiced_run >= opt.history_reset_frames) {
      history.clear();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy, spectral flux, band energy (32 ms window)

inline constexpr double kLogEnergyEpsilon = 1e-8;
inline constexpr double kEnvelopeBandLowHz = 300.0;
inline constexpr double kEnvelopeBandHighHz = 2500.0;

struct EnergyFlux {
  std::vector<double> log_energy;     // ln(RMS + 1e-8)
  std::vector<double> spectral_flux;  // L2 distance of consecutive L1-normalized spectra
};

namespace detail {

struct ShortWindowAnalysis {
  std::vector<double> log_energy;
  std::vector<double> spectral_flux;
  std::vector<double> band_energy;  // 300-2500 Hz power of the Hann-windowed spectrum
};

inline ShortWindowAnalysis short_window_analysis(const AudioTrack& track) {
  const FrameGrid grid = make_frame_grid(track.samples.size(), track.sample_rate);
  const auto win = static_cast<std::size_t>(std::lround(kShortWindowS * track.sample_rate));
  const std::size_t offset = (grid.window - win) / 2;

  ShortWindowAnalysis out;
  out.log_energy.resize(grid.num_frames);
  out.spectral_flux.resize(grid.num_frames);
  out.band_energy.resize(grid.num_frames);
  if (grid.num_frames == 0) return out;

  RealFft fft(next_pow2(win));
  const std::vector<double> hann = hann_window(win);
  const double bin_hz = static_cast<double>(track.sample_rate) / static_cast<double>(fft.size());
  const auto band_lo = static_cast<std::size_t>(std::ceil(kEnvelopeBandLowHz / bin_hz));
  const auto band_hi = std::min(static_cast<std::size_t>(std::floor(kEnvelopeBandHighHz / bin_hz)),
                                fft.bins() - 1);

  std::vector<double> buf(fft.size(), 0.0);
  std::vector<std::complex<double>> spec;
  std::vector<double> prev(fft.bins(), 0.0);
  std::vector<double> cur(fft.bins(), 0.0);

  for (std::size_t t = 0; t < grid.num_frames; ++t) {
    const double* x = track.samples.data() + t * grid.hop + offset;
    double sum_sq = 0.0;
    for (std::size_t n = 0; n < win; ++n) {
      sum_sq += x[n] * x[n];
      buf[n] = x[n] * hann[n];
    }
    out.log_energy[t] = std::log(std::sqrt(sum_sq / static_cast<double>(win)) + kLogEnergyEpsilon);

    fft.forward(buf, spec);
    double l1 = 0.0;
    double band = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      cur[k] = std::abs(spec[k]);
      l1 += cur[k];
      if (k >= band_lo && k <= band_hi) band += std::norm(spec[k]);
    }
    out.band_energy[t] = band;
    if (l1 > 0.0) {
      for (auto& v : cur) v /= l1;
    } else {
      std::fill(cur.begin(), cur.end(), 0.0);
    }
    double flux = 0.0;
    if (t > 0) {
      for (std::size_t k = 0; k < cur.size(); ++k) {
        const double d = cur[k] - prev[k];
        flux += d * d;
      }
    }
    out.spectral_flux[t] = std::sqrt(flux);
    std::swap(prev, cur);
  }
  return out;
}

}  // namespace detail

inline EnergyFlux frame_energy_flux(const AudioTrack& track) {
  auto a = detail::short_window_analysis(track);
  return {std::move(a.log_energy), std::move(a.spectral_flux)};
}

// ---------------------------------------------------------------------------
// CPPS

/// Raw cepstral peak prominence (smoothed) per frame, in dB.
inline std::vector<double> frame_cpps(const AudioTrack& track) {
  const FrameGrid grid = make_frame_grid(track.samples.size(), track.sample_rate);
  const double rate = track.sample_rate;
  const std::size_t win = grid.window;
  std::vector<double> out(grid.num_frames, 0.0);
  if (grid.num_frames == 0) return out;

  constexpr std::size_t kTimeSmooth = 10;      // frames: [t - 5, t + 4]
  constexpr std::size_t kQuefrencySmooth = 10;  // bins: [q - 5, q + 4]
  const auto q_peak_lo = static_cast<std::size_t>(std::ceil(rate / kMaxF0Hz));
  const auto q_hi = static_cast<std::size_t>(std::floor(rate / kMinF0Hz));
  const auto q_fit_lo = static_cast<std::size_t>(std::lround(0.001 * rate));
  const std::size_t q_store = q_hi + kQuefrencySmooth / 2;

  detail::RealFft fft(detail::next_pow2(win));
  const std::vector<double> hann = detail::hann_window(win);
  std::vector<double> buf(fft.size(), 0.0);
  std::vector<std::complex<double>> spec;
  std::vector<double> ceps_full;

  const auto cepstrum = [&](std::size_t t) {
    const double* x = track.samples.data() + t * grid.hop;
    for (std::size_t n = 0; n < win; ++n) buf[n] = x[n] * hann[n];
    fft.forward(buf, spec);
    double peak_power = 0.0;
    for (auto& c : spec) {
      c = std::norm(c);
      peak_power = std::max(peak_power, c.real());
    }
    std::vector<double> ceps(q_store + 1, 0.0);
    if (peak_power <= 0.0) return ceps;
    // Floor relative to the frame maximum so a gain change shifts every bin equally.
    const double floor_power = 1e-10 * peak_power;
    for (auto& c : spec) c = 10.0 * std::log10(std::max(c.real(), floor_power));
    fft.inverse(spec, ceps_full);
    std::copy_n(ceps_full.begin(), q_store + 1, ceps.begin());
    return ceps;
  };

  std::deque<std::vector<double>> recent;  // cepstra of frames [first_index, ...)
  std::size_t first_index = 0;
  std::size_t next_out = 0;
  std::vector<double> avg(q_store + 1);
  std::vector<double> smooth(q_store + 1);

  const auto emit = [&](std::size_t t) {
    const std::size_t lo = t >= kTimeSmooth / 2 ? t - kTimeSmooth / 2 : 0;
    const std::size_t hi = std::min(t + kTimeSmooth / 2 - 1, grid.num_frames - 1);
    std::fill(avg.begin(), avg.end(), 0.0);
    for (std::size_t f = lo; f <= hi; ++f) {
      const auto& c = recent[f - first_index];
      for (std::size_t q = 0; q <= q_store; ++q) avg[q] += c[q];
    }
    const double count = static_cast<double>(hi - lo + 1);
    for (auto& v : avg) v /= count;

    for (std::size_t q = q_fit_lo; q <= q_hi; ++q) {
      const std::size_t a = q >= kQuefrencySmooth / 2 ? q - kQuefrencySmooth / 2 : 0;
      const std::size_t b = std::min(q + kQuefrencySmooth / 2 - 1, q_store);
      double s = 0.0;
      for (std::size_t k = a; k <= b; ++k) s += avg[k];
      smooth[q] = s / static_cast<double>(b - a + 1);
    }

    // Least-squares line over the 1 ms .. 1/60 s quefrency range.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(q_hi - q_fit_lo + 1);
    for (std::size_t q = q_fit_lo; q <= q_hi; ++q) {
      const double xq = static_cast<double>(q);
      sx += xq;
      sy += smooth[q];
      sxx += xq * xq;
      sxy += xq * smooth[q];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;

    std::size_t q_peak = q_peak_lo;
    for (std::size_t q = q_peak_lo; q <= q_hi; ++q) {
      if (smooth[q] > smooth[q_peak]) q_peak = q;
    }
    out[t] = smooth[q_peak] - (intercept + slope * static_cast<double>(q_peak));
  };

  for (std::size_t j = 0; j < grid.num_frames; ++j) {
    recent.push_back(cepstrum(j));
    while (next_out < grid.num_frames &&
           (next_out + kTimeSmooth / 2 - 1 <= j || j + 1 == grid.num_frames)) {
      while (first_index + kTimeSmooth / 2 < next_out) {
        recent.pop_front();
        ++first_index;
      }
      emit(next_out++);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Syllable-rate envelope

struct EnvelopeAnalysis {
  std::vector<double> rate;             // qualifying peaks within +-500 ms, per second
  std::vector<std::uint8_t> peaks;      // 1 where a qualifying envelope peak sits
};

namespace detail {

inline constexpr std::size_t kEnvelopeSmoothFrames = 5;   // 50 ms
inline constexpr std::size_t kEnvelopeContextFrames = 50; // +-500 ms
inline constexpr double kEnvelopePeakRatio = 1.5;

inline EnvelopeAnalysis envelope_from_band_energy(const std::vector<double>& band) {
  const std::size_t n = band.size();
  EnvelopeAnalysis out;
  out.rate.assign(n, 0.0);
  out.peaks.assign(n, 0);
  if (n == 0) return out;

  std::vector<double> env(n);
  const std::size_t half = kEnvelopeSmoothFrames / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(t + half, n - 1);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += band[k];
    env[t] = s / static_cast<double>(hi - lo + 1);
  }

  const std::size_t ctx = kEnvelopeContextFrames;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (!(env[t] > env[t - 1] && env[t] >= env[t + 1])) continue;
    const std::size_t lo = t >= ctx ? t - ctx : 0;
    const std::size_t hi = std::min(t + ctx, n - 1);
    const double local = median(std::vector<double>(env.begin() + static_cast<std::ptrdiff_t>(lo),
                                                    env.begin() + static_cast<std::ptrdiff_t>(hi) + 1));
    if (env[t] > kEnvelopePeakRatio * local) out.peaks[t] = 1;
  }

  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + out.peaks[t];
  constexpr double kCountWindowS = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= ctx ? t - ctx : 0;
    const std::size_t hi = std::min(t + ctx, n - 1);
    out.rate[t] = static_cast<double>(prefix[hi + 1] - prefix[lo]) / kCountWindowS;
  }
  return out;
}

}  // namespace detail

inline EnvelopeAnalysis envelope_analysis(const AudioTrack& track) {
  return detail::envelope_from_band_energy(detail::short_window_analysis(track).band_energy);
}

/// Estimated syllable nuclei per second around each frame.
inline std::vector<double> envelope_rate(const AudioTrack& track) {
  return envelope_analysis(track).rate;
}

// ---------------------------------------------------------------------------
// Frame series

struct FrameSeries {
  std::string track_id;
  FrameGrid grid;
  double frame_period_s = kFramePeriodS;
  std::vector<std::optional<double>> f0_hz;
  std::vector<double> voicing;
  std::vector<double> log_energy;
  std::vector<double> spectral_flux;
  std::vector<double> cpps_raw;
  std::vector<double> envelope_rate;
  std::vector<std::uint8_t> syllable_peak;

  std::size_t size() const { return voicing.size(); }
  bool voiced(std::size_t t) const { return f0_hz[t].has_value(); }
};

inline FrameSeries compute_frame_series(const AudioTrack& track) {
  if (track.samples.empty()) throw DataError(fmt::format("track {} is empty", track.track_id));
  FrameSeries fs;
  fs.track_id = track.track_id;
  fs.grid = make_frame_grid(track.samples.size(), track.sample_rate);
  auto pitch = track_pitch(track);
  auto sw = detail::short_window_analysis(track);
  auto env = detail::envelope_from_band_energy(sw.band_energy);
  fs.f0_hz = std::move(pitch.f0_hz);
  fs.voicing = std::move(pitch.voicing);
  fs.log_energy = std::move(sw.log_energy);
  fs.spectral_flux = std::move(sw.spectral_flux);
  fs.cpps_raw = frame_cpps(track);
  fs.envelope_rate = std::move(env.rate);
  fs.syllable_peak = std::move(env.peaks);
  return fs;
}

// ---------------------------------------------------------------------------
// Per-track normalization

inline constexpr double kSpeechEnergyPercentile = 0.25;

struct NormalizedFrameSeries {
  FrameSeries frames;
  std::vector<std::optional<double>> pitch_z;  // z-scored log2 F0, absent when unvoiced
  std::vector<double> energy_z;
  std::vector<double> cpps_z;
  std::vector<double> rate_z;
  std::vector<std::uint8_t> speech_mask;
  std::vector<std::string> warnings;

  std::size_t size() const { return frames.size(); }
  bool voiced(std::size_t t) const { return pitch_z[t].has_value(); }
};

/// Normalizes several frame series against moments pooled over all of them,
/// e.g. every file rendered by one synthetic voice. The speech mask uses the
/// pooled 25th log-energy percentile.
inline std::vector<NormalizedFrameSeries> normalize_frame_group(std::vector<FrameSeries> group,
                                                                const std::string& group_name) {
  std::vector<double> log_energy, log_f0, energy_sp, cpps_sp, rate_sp;
  for (const auto& fs : group) {
    log_energy.insert(log_energy.end(), fs.log_energy.begin(), fs.log_energy.end());
  }
  const double energy_floor = detail::percentile(log_energy, kSpeechEnergyPercentile);

  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& fs : group) {
    auto& mask = masks.emplace_back(fs.size(), 0);
    for (std::size_t t = 0; t < fs.size(); ++t) {
      mask[t] = (fs.log_energy[t] > energy_floor || fs.voiced(t)) ? 1 : 0;
      if (fs.voiced(t)) log_f0.push_back(std::log2(*fs.f0_hz[t]));
      if (mask[t]) {
        energy_sp.push_back(fs.log_energy[t]);
        cpps_sp.push_back(fs.cpps_raw[t]);
        rate_sp.push_back(fs.envelope_rate[t]);
      }
    }
  }
  const auto all = [](std::size_t) { return true; };
  const detail::Moments pitch_m = detail::moments_of(log_f0, all);
  const detail::Moments energy_m = detail::moments_of(energy_sp, all);
  const detail::Moments cpps_m = detail::moments_of(cpps_sp, all);
  const detail::Moments rate_m = detail::moments_of(rate_sp, all);

  std::vector<std::string> warnings;
  const auto check = [&](const detail::Moments& m, const char* channel) {
    if (m.count > 0 && m.degenerate()) {
      warnings.push_back(fmt::format("{}: zero variance in {}; {} values set to 0", group_name,
                                     channel, channel));
    }
  };
  check(pitch_m, "pitch");
  check(energy_m, "energy");
  check(cpps_m, "cpps");
  check(rate_m, "rate");

  std::vector<NormalizedFrameSeries> out;
  out.reserve(group.size());
  for (std::size_t g = 0; g < group.size(); ++g) {
    NormalizedFrameSeries n;
    const std::size_t len = group[g].size();
    n.pitch_z.assign(len, std::nullopt);
    n.energy_z.resize(len);
    n.cpps_z.resize(len);
    n.rate_z.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      const auto& fs = group[g];
      if (fs.voiced(t)) n.pitch_z[t] = pitch_m.z(std::log2(*fs.f0_hz[t]));
      n.energy_z[t] = energy_m.z(fs.log_energy[t]);
      n.cpps_z[t] = cpps_m.z(fs.cpps_raw[t]);
      n.rate_z[t] = rate_m.z(fs.envelope_rate[t]);
    }
    n.speech_mask = std::move(masks[g]);
    n.warnings = warnings;
    n.frames = std::move(group[g]);
    out.push_back(std::move(n));
  }
  return out;
}

inline NormalizedFrameSeries normalize_frame_series(FrameSeries fs) {
  std::string name = fs.track_id;
  std::vector<FrameSeries> one;
  one.push_back(std::move(fs));
  return std::move(normalize_frame_group(std::move(one), name).front());
}

// ---------------------------------------------------------------------------
// Frame dump

inline constexpr std::string_view kFrameCsvHeader =
    "frame_idx,t_s,f0_hz,voicing,log_energy,spectral_flux,cpps_raw,envelope_rate";

inline void write_frame_csv(std::ostream& out, const FrameSeries& fs) {
  out << kFrameCsvHeader << '\n';
  for (std::size_t t = 0; t < fs.size(); ++t) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", t, fs.grid.frame_start_s(t),
                       fs.f0_hz[t] ? fmt::format("{}", *fs.f0_hz[t]) : std::string{},
                       fs.voicing[t], fs.log_energy[t], fs.spectral_flux[t], fs.cpps_raw[t],
                       fs.envelope_rate[t]);
  }
}

}  // namespace prosody
