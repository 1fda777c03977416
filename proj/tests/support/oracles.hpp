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

// Independent brute-force oracles shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "prosody/prosody.hpp"

namespace prosody::testing {

/// Naive O(n^2) average ranks plus direct covariance.
inline std::optional<double> oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (const double w : v) less += w < v[i], equal += w == v[i];
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (rx[i] - mx) * (ry[i] - my);
    cxx += (rx[i] - mx) * (rx[i] - mx);
    cyy += (ry[i] - my) * (ry[i] - my);
  }
  if (cxx == 0 || cyy == 0) return std::nullopt;
  return cxy / std::sqrt(cxx * cyy);
}

/// Exhaustive neighbor oracle: all distances, full sort by (distance, id).
inline NeighborResult oracle_neighbors(const ProsodyVector& anchor, const std::vector<ProsodyVector>& pool,
                                       std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& p : pool) {
    double s = 0.0;
    for (std::size_t d = 0; d < kNumDims; ++d) s += (anchor.values[d] - p.values[d]) * (anchor.values[d] - p.values[d]);
    all.emplace_back(std::sqrt(s), p.utterance_id);
  }
  std::sort(all.begin(), all.end());
  NeighborResult r;
  for (std::size_t i = 0; i < k; ++i) {
    r.similar.push_back({all[i].second, all[i].first, i + 1});
    const auto& far = all[all.size() - 1 - i];  // last k of the ascending order, reversed
    r.dissimilar.push_back({far.second, far.first, i + 1});
  }
  return r;
}

/// Rounds to multiples of 2^-20 so mirror images below are exact ties.
inline FeatureArray on_grid(FeatureArray a) {
  for (auto& x : a) x = std::ldexp(std::round(std::ldexp(x, 20)), -20);
  return a;
}

/// Random pool of `size` vectors plus planted ties inside the reported
/// blocks: exact copies and mirror images (about the anchor) of the three
/// nearest and three farthest members. The anchor must be on the grid.
inline std::vector<ProsodyVector> pool_with_ties(const ProsodyVector& anchor, std::mt19937_64& rng,
                                                 std::size_t size) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ProsodyVector> pool;
  for (std::size_t i = 0; i < size; ++i) {
    ProsodyVector v;
    v.utterance_id = fmt::format("EN_{:03d}", (i * 37) % size);
    for (auto& x : v.values) x = g(rng);
    v.values = on_grid(v.values);
    pool.push_back(v);
  }
  std::vector<std::size_t> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dissimilarity(anchor, pool[a]) < dissimilarity(anchor, pool[b]);
  });
  for (const std::size_t i : {order[0], order[1], order[2], order[size - 1], order[size - 2], order[size - 3]}) {
    ProsodyVector copy = pool[i], mirror = pool[i];
    copy.utterance_id = fmt::format("EN_{}_copy", i);
    mirror.utterance_id = fmt::format("EN_{}_mirror", i);
    for (std::size_t d = 0; d < kNumDims; ++d) mirror.values[d] = 2 * anchor.values[d] - pool[i].values[d];
    pool.push_back(copy);
    pool.push_back(mirror);
  }
  return pool;
}

}  // namespace prosody::testing
