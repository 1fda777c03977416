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

// Spearman correlation between prosody dimensions across matched pairs.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "prosody/corpus.hpp"
#include "prosody/error.hpp"
#include "prosody/midlevel.hpp"

namespace prosody {

/// Ranks starting at 1; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

/// Pearson correlation; nullopt when either input is constant.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman's rho with average-rank ties; nullopt (undefined) if either
/// sequence is constant.
inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError(fmt::format("spearman: length mismatch ({} vs {})", x.size(), y.size()));
  }
  if (x.size() < 3) throw DataError(fmt::format("spearman: need at least 3 points, got {}", x.size()));
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// A prosody vector keyed by the pair it belongs to.
struct PairVector {
  std::string pair_id;
  FeatureArray values{};
};

struct CorrelationMatrix {
  Language row_language = Language::kEN;
  Language col_language = Language::kES;
  std::size_t n = 0;  // pairs used
  std::vector<double> values = std::vector<double>(kNumDims * kNumDims,
                                                   std::numeric_limits<double>::quiet_NaN());

  bool defined(std::size_t i, std::size_t j) const { return !std::isnan(values[i * kNumDims + j]); }
  std::optional<double> at(std::size_t i, std::size_t j) const {
    const double v = values[i * kNumDims + j];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
};

/// Entry (i, j) = spearman(dimension i of `rows`, dimension j of `cols`) over
/// pairs. Both inputs must list the same pair_ids in the same order.
inline CorrelationMatrix correlation_matrix(std::span<const PairVector> rows, Language row_language,
                                            std::span<const PairVector> cols, Language col_language) {
  if (rows.size() != cols.size()) {
    throw DataError(fmt::format("misaligned pair sets ({} vs {} pairs)", rows.size(), cols.size()));
  }
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (rows[p].pair_id != cols[p].pair_id) {
      throw DataError(fmt::format("misaligned pair sets at position {} ({} vs {})", p,
                                  rows[p].pair_id, cols[p].pair_id));
    }
  }
  const std::size_t n = rows.size();
  if (n < 3) throw DataError(fmt::format("need at least 3 pairs, got {}", n));

  const auto rank_columns = [n](std::span<const PairVector> set) {
    std::vector<std::vector<double>> ranked(kNumDims);
    std::vector<double> column(n);
    for (std::size_t d = 0; d < kNumDims; ++d) {
      for (std::size_t p = 0; p < n; ++p) column[p] = set[p].values[d];
      ranked[d] = average_ranks(column);
    }
    return ranked;
  };
  const auto rx = rank_columns(rows);
  const auto ry = rank_columns(cols);

  CorrelationMatrix m;
  m.row_language = row_language;
  m.col_language = col_language;
  m.n = n;
  for (std::size_t i = 0; i < kNumDims; ++i) {
    for (std::size_t j = 0; j < kNumDims; ++j) {
      if (const auto r = pearson(rx[i], ry[j])) m.values[i * kNumDims + j] = *r;
    }
  }
  return m;
}

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double rho = 0.0;
};

struct DiagonalSummary {
  double threshold = 0.3;
  std::size_t n = 0;
  /// Share of the 100 same-feature-same-span entries with rho >= threshold;
  /// undefined entries count as below.
  double fraction_at_or_above = 0.0;
  std::size_t undefined_diagonal = 0;
  /// Mean diagonal rho per base feature over its defined spans.
  std::array<std::optional<double>, kNumBaseFeatures> feature_mean{};
  /// Largest |rho| off-diagonal entries, descending; ties by (row, col).
  std::vector<MatrixEntry> top_off_diagonal;
};

inline DiagonalSummary summarize_diagonal(const CorrelationMatrix& m, double threshold,
                                          std::size_t top_k = 10) {
  DiagonalSummary s;
  s.threshold = threshold;
  s.n = m.n;
  std::size_t hits = 0;
  for (std::size_t f = 0; f < kNumBaseFeatures; ++f) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t span = 0; span < kNumSpans; ++span) {
      const std::size_t d = f * kNumSpans + span;
      const auto r = m.at(d, d);
      if (!r) {
        ++s.undefined_diagonal;
        continue;
      }
      if (*r >= threshold) ++hits;
      sum += *r;
      ++count;
    }
    if (count > 0) s.feature_mean[f] = sum / static_cast<double>(count);
  }
  s.fraction_at_or_above = static_cast<double>(hits) / static_cast<double>(kNumDims);

  std::vector<MatrixEntry> off;
  for (std::size_t i = 0; i < kNumDims; ++i) {
    for (std::size_t j = 0; j < kNumDims; ++j) {
      if (i == j) continue;
      if (const auto r = m.at(i, j)) off.push_back({i, j, *r});
    }
  }
  const std::size_t k = std::min(top_k, off.size());
  std::partial_sort(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(k), off.end(),
                    [](const MatrixEntry& a, const MatrixEntry& b) {
                      const double fa = std::abs(a.rho), fb = std::abs(b.rho);
                      if (fa != fb) return fa > fb;
                      if (a.row != b.row) return a.row < b.row;
                      return a.col < b.col;
                    });
  off.resize(k);
  s.top_off_diagonal = std::move(off);
  return s;
}

inline std::string axis_label(Language lang, std::size_t index) {
  return fmt::format("{}:{}", language_code(lang), feature_label(index));
}

/// 101 x 101 grid: label row, then one labeled row per row dimension.
/// Undefined entries are written as NaN.
inline void write_matrix_csv(std::ostream& out, const CorrelationMatrix& m) {
  std::string line;
  for (std::size_t j = 0; j < kNumDims; ++j) line += "," + axis_label(m.col_language, j);
  out << line << '\n';
  for (std::size_t i = 0; i < kNumDims; ++i) {
    line = axis_label(m.row_language, i);
    for (std::size_t j = 0; j < kNumDims; ++j) {
      const auto r = m.at(i, j);
      line += r ? fmt::format(",{}", *r) : std::string(",NaN");
    }
    out << line << '\n';
  }
}

inline void write_summary(std::ostream& out, const CorrelationMatrix& m, const DiagonalSummary& s) {
  out << fmt::format("{} vs {} Spearman correlations over {} pairs\n", language_code(m.row_language),
                     language_code(m.col_language), s.n);
  out << fmt::format("same feature, same span: fraction {:.2f} of the 100 entries have rho >= {}",
                     s.fraction_at_or_above, s.threshold);
  if (s.undefined_diagonal > 0) out << fmt::format(" ({} undefined)", s.undefined_diagonal);
  out << "\n\nmean same-span rho by feature:\n";
  for (std::size_t f = 0; f < kNumBaseFeatures; ++f) {
    out << fmt::format("  {:<18} {}\n", kBaseFeatureNames[f],
                       s.feature_mean[f] ? fmt::format("{:+.4f}", *s.feature_mean[f])
                                         : std::string("undefined"));
  }
  out << "\nstrongest off-diagonal entries:\n";
  for (const auto& e : s.top_off_diagonal) {
    out << fmt::format("  {} vs {}: {:+.4f}\n", axis_label(m.row_language, e.row),
                       axis_label(m.col_language, e.col), e.rho);
  }
}

}  // namespace prosody
