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

#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "prosody/prosody.hpp"
#include "support/oracles.hpp"

namespace prosody {
namespace {

ProsodyVector vec(std::string id, FeatureArray values = {}) {
  ProsodyVector v;
  v.utterance_id = std::move(id);
  v.values = values;
  return v;
}

FeatureArray random_array(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  FeatureArray a;
  for (auto& x : a) x = g(rng);
  return a;
}

TEST(Dissimilarity, Examples) {
  FeatureArray zero{}, unit{}, three_four{};
  unit[17] = 1.0;
  three_four[0] = 3.0;
  three_four[1] = 4.0;
  EXPECT_EQ(dissimilarity(zero, zero), 0.0);
  EXPECT_EQ(dissimilarity(zero, unit), 1.0);
  EXPECT_EQ(dissimilarity(three_four, zero), 5.0);
  EXPECT_EQ(dissimilarity(vec("a", three_four), vec("b")), 5.0);
}

TEST(Dissimilarity, Errors) {
  FeatureArray a{}, b{};
  b[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dissimilarity(a, b), DataError);
  b[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(dissimilarity(b, a), DataError);
  const std::vector<double> short_vec(99, 0.0);
  EXPECT_THROW(dissimilarity(std::span<const double>(a), std::span<const double>(short_vec)), DataError);
}

TEST(Dissimilarity, MetricProperties) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_array(rng), b = random_array(rng), c = random_array(rng);
    const double ab = dissimilarity(a, b), ba = dissimilarity(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(dissimilarity(a, a), 0.0);
    EXPECT_LE(dissimilarity(a, c), ab + dissimilarity(b, c) + 1e-9);
    FeatureArray at = a, bt = b;
    const auto t = random_array(rng, 10.0);
    for (std::size_t d = 0; d < kNumDims; ++d) at[d] += t[d], bt[d] += t[d];
    EXPECT_NEAR(dissimilarity(at, bt), ab, 1e-9);
  }
}

TEST(Neighbors, OrderingExample) {
  FeatureArray d1{}, d2{}, d3{};
  d1[0] = 1;
  d2[0] = 2;
  d3[0] = 3;
  const std::vector<ProsodyVector> pool = {vec("EN_c", d3), vec("EN_a", d1), vec("EN_b", d2)};
  const auto r = neighbors(vec("EN_anchor"), pool, 1);
  ASSERT_EQ(r.similar.size(), 1u);
  ASSERT_EQ(r.dissimilar.size(), 1u);
  EXPECT_EQ(r.similar[0], (Neighbor{"EN_a", 1.0, 1}));
  EXPECT_EQ(r.dissimilar[0], (Neighbor{"EN_c", 3.0, 1}));
}

TEST(Neighbors, TieBreakByUtteranceId) {
  FeatureArray x{}, y{};
  x[0] = 1;
  y[1] = -1;
  const std::vector<ProsodyVector> pool = {vec("EN_z", x), vec("EN_m", y)};
  const auto r = neighbors(vec("EN_anchor"), pool, 2);
  EXPECT_EQ(r.similar[0].utterance_id, "EN_m");
  EXPECT_EQ(r.similar[1].utterance_id, "EN_z");
  EXPECT_EQ(r.dissimilar[0].utterance_id, "EN_z");
}

TEST(Neighbors, Errors) {
  const std::vector<ProsodyVector> pool = {vec("a"), vec("b")};
  EXPECT_THROW(neighbors(vec("x"), std::span<const ProsodyVector>{}, 1), DataError);
  EXPECT_THROW(neighbors(vec("x"), pool, 3), DataError);
  EXPECT_THROW(neighbors(vec("a"), pool, 1), DataError);
}

TEST(Neighbors, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto anchor = vec("EN_anchor", testing::on_grid(random_array(rng)));
    const auto pool = testing::pool_with_ties(anchor, rng, 200);
    const auto got = neighbors(anchor, pool, 4);
    const auto want = testing::oracle_neighbors(anchor, pool, 4);
    EXPECT_EQ(got.similar, want.similar);
    EXPECT_EQ(got.dissimilar, want.dissimilar);
  }
}

}  // namespace
}  // namespace prosody
