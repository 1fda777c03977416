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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace prosody::detail {

/// Median of a copy of `v`; the mean of the two middle values for even sizes.
/// Returns 0 for an empty input.
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Percentile with linear interpolation between order statistics
/// (position p * (n - 1)). p in [0, 1].
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

/// Population mean and standard deviation.
struct Moments {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;

  /// Fewer than two values or no spread beyond rounding; z-scores are undefined.
  bool degenerate() const {
    return count < 2 || !(std > 1e-12 * std::max(1.0, std::abs(mean)));
  }

  double z(double v) const { return degenerate() ? 0.0 : (v - mean) / std; }
};

/// Two-pass moments over the values selected by `keep`. Sums run over the
/// values in sorted order, so the result does not depend on input order.
template <typename Values, typename Keep>
Moments moments_of(const Values& values, Keep&& keep) {
  std::vector<double> kept;
  kept.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (keep(i)) kept.push_back(values[i]);
  }
  Moments m;
  m.count = kept.size();
  if (m.count == 0) return m;
  std::sort(kept.begin(), kept.end());
  double sum = 0.0;
  for (const double v : kept) sum += v;
  m.mean = sum / static_cast<double>(m.count);
  double ss = 0.0;
  for (const double v : kept) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(m.count));
  return m;
}

}  // namespace prosody::detail
