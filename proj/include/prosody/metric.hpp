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

// Prosodic dissimilarity: unweighted Euclidean distance between prosody
// vectors, and anchor-based retrieval of the most and least similar ones.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "prosody/error.hpp"
#include "prosody/midlevel.hpp"

namespace prosody {

inline double dissimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError(fmt::format("dimension mismatch ({} vs {})", a.size(), b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw DataError(fmt::format("non-finite value in dimension {}", i));
    }
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double dissimilarity(const ProsodyVector& a, const ProsodyVector& b) {
  return dissimilarity(a.values, b.values);
}

struct Neighbor {
  std::string utterance_id;
  double dissimilarity = 0.0;
  std::size_t rank = 0;  // 1-based within its block

  bool operator==(const Neighbor&) const = default;
};

struct NeighborResult {
  std::vector<Neighbor> similar;     // ascending dissimilarity
  std::vector<Neighbor> dissimilar;  // descending dissimilarity
};

/// The k closest and k farthest pool members. Ties in distance are ordered by
/// utterance_id. The anchor must not be in the pool.
inline NeighborResult neighbors(const ProsodyVector& anchor, std::span<const ProsodyVector> pool,
                                std::size_t k = 4) {
  if (pool.empty()) throw DataError("neighbor pool is empty");
  if (k > pool.size()) {
    throw DataError(fmt::format("k = {} exceeds pool size {}", k, pool.size()));
  }
  std::vector<Neighbor> ranked;
  ranked.reserve(pool.size());
  for (const auto& v : pool) {
    if (v.utterance_id == anchor.utterance_id) {
      throw DataError(fmt::format("pool contains the anchor {}", anchor.utterance_id));
    }
    ranked.push_back({v.utterance_id, dissimilarity(anchor, v), 0});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Neighbor& x, const Neighbor& y) {
    if (x.dissimilarity != y.dissimilarity) return x.dissimilarity < y.dissimilarity;
    return x.utterance_id < y.utterance_id;
  });

  NeighborResult out;
  for (std::size_t i = 0; i < k; ++i) {
    out.similar.push_back(ranked[i]);
    out.similar.back().rank = i + 1;
    out.dissimilar.push_back(ranked[ranked.size() - 1 - i]);
    out.dissimilar.back().rank = i + 1;
  }
  return out;
}

}  // namespace prosody
