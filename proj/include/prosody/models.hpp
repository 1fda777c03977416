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

// Prosody-transfer baselines: speaker-aware pair splits, the naive (identity)
// model, linear regression, evaluation by average dissimilarity, evaluation
// of externally synthesized audio, and coefficient inspection.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <fmt/core.h>
#include <json.hpp>

#include "prosody/analysis.hpp"
#include "prosody/corpus.hpp"
#include "prosody/error.hpp"
#include "prosody/metric.hpp"
#include "prosody/midlevel.hpp"
#include "prosody/pipeline.hpp"

namespace prosody {

enum class Direction { kEnToEs, kEsToEn };

inline Language source_language(Direction d) {
  return d == Direction::kEnToEs ? Language::kEN : Language::kES;
}
inline Language target_language(Direction d) { return other_language(source_language(d)); }

inline std::string_view direction_code(Direction d) {
  return d == Direction::kEnToEs ? "en-es" : "es-en";
}

inline std::string direction_label(Direction d) {
  return fmt::format("{}->{}", language_code(source_language(d)), language_code(target_language(d)));
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "en-es" || s == "EN-ES") return Direction::kEnToEs;
  if (s == "es-en" || s == "ES-EN") return Direction::kEsToEn;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  std::vector<std::string> train;  // pair_ids, manifest order
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  std::uint64_t effective_seed = 0;  // seed + retries needed
  std::set<std::string> shared_speakers;

  bool operator==(const SplitSpec&) const = default;
};

namespace detail {

/// Unbiased draw from [0, n) using rejection; portable across standard libraries.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::set<std::string> pair_speakers(const MatchedPair& p) {
  return {p.en.speaker_id, p.es.speaker_id};
}

}  // namespace detail

/// Seeded greedy speaker assignment: shuffled speakers go to the test side
/// until the pairs touching them first reach `test_fraction` of the total.
/// Pairs straddling both sides take the side that adds fewer shared speakers
/// (train on ties). A result sharing more than one speaker is retried with
/// the next seed, up to `max_retries` times.
inline SplitSpec split_pairs(std::span<const MatchedPair> pairs, double test_fraction,
                             std::uint64_t seed, std::size_t max_retries = 100) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError(fmt::format("test fraction {} outside (0, 1)", test_fraction));
  }
  std::set<std::string> speaker_set;
  for (const auto& p : pairs) {
    const auto s = detail::pair_speakers(p);
    speaker_set.insert(s.begin(), s.end());
  }
  if (speaker_set.size() < 2) {
    throw DataError(fmt::format("need at least 2 distinct speakers, found {}", speaker_set.size()));
  }
  const double target = test_fraction * static_cast<double>(pairs.size());

  for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
    const std::uint64_t eff = seed + attempt;
    std::mt19937_64 rng(eff);
    std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());
    detail::shuffle(speakers, rng);

    std::set<std::string> test_speakers;
    for (std::size_t i = 0; i + 1 < speakers.size(); ++i) {
      test_speakers.insert(speakers[i]);
      std::size_t touching = 0;
      for (const auto& p : pairs) {
        for (const auto& s : detail::pair_speakers(p)) {
          if (test_speakers.count(s)) {
            ++touching;
            break;
          }
        }
      }
      if (static_cast<double>(touching) >= target) break;
    }

    SplitSpec spec;
    spec.seed = seed;
    spec.effective_seed = eff;
    std::set<std::string> in_test_pairs, in_train_pairs;
    std::vector<const MatchedPair*> straddling;
    std::map<std::string, bool> side;  // pair_id -> is_test
    for (const auto& p : pairs) {
      const auto s = detail::pair_speakers(p);
      const auto n_test = static_cast<std::size_t>(
          std::count_if(s.begin(), s.end(), [&](const auto& x) { return test_speakers.count(x) > 0; }));
      if (n_test == s.size()) {
        side[p.pair_id] = true;
        in_test_pairs.insert(s.begin(), s.end());
      } else if (n_test == 0) {
        side[p.pair_id] = false;
        in_train_pairs.insert(s.begin(), s.end());
      } else {
        straddling.push_back(&p);
      }
    }
    for (const auto* p : straddling) {
      const auto s = detail::pair_speakers(*p);
      std::size_t new_if_test = 0, new_if_train = 0;
      for (const auto& x : s) {
        const bool shared = in_test_pairs.count(x) && in_train_pairs.count(x);
        if (!shared && in_train_pairs.count(x)) ++new_if_test;
        if (!shared && in_test_pairs.count(x)) ++new_if_train;
      }
      const bool to_test = new_if_test < new_if_train;
      side[p->pair_id] = to_test;
      (to_test ? in_test_pairs : in_train_pairs).insert(s.begin(), s.end());
    }
    for (const auto& p : pairs) (side[p.pair_id] ? spec.test : spec.train).push_back(p.pair_id);
    std::set_intersection(in_test_pairs.begin(), in_test_pairs.end(), in_train_pairs.begin(),
                          in_train_pairs.end(),
                          std::inserter(spec.shared_speakers, spec.shared_speakers.end()));
    if (spec.shared_speakers.size() <= 1 && !spec.test.empty() && !spec.train.empty()) return spec;
  }
  throw ConstraintError(fmt::format(
      "no split with at most one shared speaker found for seeds {}..{}", seed, seed + max_retries));
}

inline constexpr std::string_view kSplitCsvHeader = "pair_id,partition";

inline void write_split_csv(std::ostream& out, const SplitSpec& spec,
                            std::span<const MatchedPair> pairs) {
  out << fmt::format("# seed={} effective_seed={} train_pairs={} test_pairs={} shared_speakers={}\n",
                     spec.seed, spec.effective_seed, spec.train.size(), spec.test.size(),
                     spec.shared_speakers.size());
  out << kSplitCsvHeader << '\n';
  const std::unordered_set<std::string> test(spec.test.begin(), spec.test.end());
  for (const auto& p : pairs) {
    out << p.pair_id << ',' << (test.count(p.pair_id) ? "test" : "train") << '\n';
  }
}

/// Reads a split file; only the partition lists and seed are recovered.
inline SplitSpec read_split_csv(std::istream& in, const std::string& source) {
  SplitSpec spec;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::chomp(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      std::istringstream meta{std::string(text.substr(1))};
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = detail::parse_number<std::uint64_t>(kv.substr(eq + 1));
        if (key == "seed" && value) spec.seed = *value;
        if (key == "effective_seed" && value) spec.effective_seed = *value;
      }
      continue;
    }
    if (!header) {
      if (text != kSplitCsvHeader) {
        throw DataError(fmt::format("{}:{}: expected header '{}'", source, line_no, kSplitCsvHeader));
      }
      header = true;
      continue;
    }
    const auto f = detail::split_csv_line(text);
    if (f.size() != 2 || (f[1] != "train" && f[1] != "test")) {
      throw DataError(fmt::format("{}:{}: malformed split row", source, line_no));
    }
    if (!seen.insert(f[0]).second) {
      throw DataError(fmt::format("{}:{}: duplicate pair_id {}", source, line_no, f[0]));
    }
    (f[1] == "test" ? spec.test : spec.train).push_back(f[0]);
  }
  if (!header) throw DataError(fmt::format("{}: missing split header", source));
  return spec;
}

inline SplitSpec load_split_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open split file {}", path.string()));
  return read_split_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Pair-aligned feature access

class FeatureIndex {
 public:
  explicit FeatureIndex(std::span<const ProsodyVector> vectors) {
    for (const auto& v : vectors) {
      if (!by_id_.emplace(v.utterance_id, &v).second) {
        throw DataError(fmt::format("duplicate utterance_id {} in features", v.utterance_id));
      }
    }
  }

  const ProsodyVector& at(const std::string& utterance_id) const {
    const auto it = by_id_.find(utterance_id);
    if (it == by_id_.end()) {
      throw DataError(fmt::format("no features for utterance {}", utterance_id));
    }
    return *it->second;
  }

 private:
  std::unordered_map<std::string, const ProsodyVector*> by_id_;
};

/// Vectors of one language for the listed pairs, in list order.
inline std::vector<PairVector> pair_vectors(const CorpusManifest& manifest,
                                            const FeatureIndex& features,
                                            std::span<const std::string> pair_ids, Language lang) {
  std::unordered_map<std::string, const MatchedPair*> pairs;
  for (const auto& p : manifest.pairs) pairs.emplace(p.pair_id, &p);
  std::vector<PairVector> out;
  out.reserve(pair_ids.size());
  for (const auto& id : pair_ids) {
    const auto it = pairs.find(id);
    if (it == pairs.end()) throw DataError(fmt::format("pair {} not in manifest", id));
    out.push_back({id, features.at(it->second->member(lang).utterance_id).values});
  }
  return out;
}

inline std::vector<std::string> all_pair_ids(const CorpusManifest& manifest) {
  std::vector<std::string> ids;
  for (const auto& p : manifest.pairs) ids.push_back(p.pair_id);
  return ids;
}

// ---------------------------------------------------------------------------
// Models

inline FeatureArray naive_predict(const FeatureArray& x) { return x; }

inline constexpr std::size_t kNumWeightCols = kNumDims + 1;  // + intercept

struct LinearModel {
  Direction direction = Direction::kEnToEs;
  double ridge_lambda = 0.0;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(kNumDims, kNumWeightCols);  // row = target dim
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

inline constexpr double kSingularValueCutoff = 1e-10;
inline constexpr std::size_t kRecommendedTrainPairs = kNumWeightCols;

/// Per target dimension, minimizes sum (y - w.[x;1])^2 + lambda * |w without
/// intercept|^2 with a rank-revealing SVD solve; singular values below 1e-10
/// of the largest count as zero.
inline LinearModel fit_linear(std::span<const FeatureArray> inputs,
                              std::span<const FeatureArray> targets, double ridge_lambda,
                              Direction direction = Direction::kEnToEs, std::uint64_t seed = 0) {
  if (inputs.empty()) throw DataError("empty training set");
  if (inputs.size() != targets.size()) {
    throw DataError(fmt::format("{} inputs but {} targets", inputs.size(), targets.size()));
  }
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw DataError(fmt::format("ridge lambda {} must be finite and >= 0", ridge_lambda));
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index dims = kNumDims;
  const Eigen::Index extra = ridge_lambda > 0.0 ? dims : 0;

  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n + extra, dims + 1);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n + extra, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dims; ++j) {
      design(i, j) = inputs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      y(i, j) = targets[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    design(i, dims) = 1.0;
  }
  // Ridge as extra rows sqrt(lambda) * e_j; the intercept column is not penalized.
  for (Eigen::Index j = 0; j < extra; ++j) design(n + j, j) = std::sqrt(ridge_lambda);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSingularValueCutoff);
  const Eigen::MatrixXd solution = svd.solve(y);  // (dims + 1) x dims

  LinearModel model;
  model.direction = direction;
  model.ridge_lambda = ridge_lambda;
  model.weights = solution.transpose();
  model.n_train = inputs.size();
  model.seed = seed;
  if (inputs.size() < kRecommendedTrainPairs) {
    model.warnings.push_back(fmt::format(
        "only {} training pairs for {} parameters per target; the fit is underdetermined",
        inputs.size(), kNumWeightCols));
  }
  if (!model.weights.allFinite()) throw DataError("linear fit produced non-finite weights");
  return model;
}

/// Fits on the listed pairs of a manifest.
inline LinearModel fit_linear(const CorpusManifest& manifest, const FeatureIndex& features,
                              std::span<const std::string> train_pairs, Direction direction,
                              double ridge_lambda, std::uint64_t seed = 0) {
  const auto src = pair_vectors(manifest, features, train_pairs, source_language(direction));
  const auto tgt = pair_vectors(manifest, features, train_pairs, target_language(direction));
  std::vector<FeatureArray> x, y;
  for (std::size_t i = 0; i < src.size(); ++i) {
    x.push_back(src[i].values);
    y.push_back(tgt[i].values);
  }
  return fit_linear(x, y, ridge_lambda, direction, seed);
}

/// y = W [x; 1].
inline FeatureArray predict(const LinearModel& model, std::span<const double> x) {
  if (model.weights.rows() != static_cast<Eigen::Index>(kNumDims) ||
      model.weights.cols() != static_cast<Eigen::Index>(kNumWeightCols)) {
    throw DataError(fmt::format("model weights are {}x{}, expected {}x{}", model.weights.rows(),
                                model.weights.cols(), kNumDims, kNumWeightCols));
  }
  if (x.size() != kNumDims) {
    throw DataError(fmt::format("input has {} dimensions, expected {}", x.size(), kNumDims));
  }
  FeatureArray y{};
  for (std::size_t i = 0; i < kNumDims; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double s = 0.0;
    for (std::size_t j = 0; j < kNumDims; ++j) s += model.weights(row, static_cast<Eigen::Index>(j)) * x[j];
    y[i] = s + model.weights(row, static_cast<Eigen::Index>(kNumDims));
  }
  return y;
}

// ---------------------------------------------------------------------------
// Evaluation

struct PairError {
  std::string pair_id;
  double error = 0.0;
};

struct EvaluationReport {
  std::string model;
  Direction direction = Direction::kEnToEs;
  std::size_t n_test = 0;
  double average_error = 0.0;
  std::vector<PairError> per_pair;  // reference order
};

/// Per-pair dissimilarity between prediction and reference; both must cover
/// the same pair_ids.
inline EvaluationReport evaluate(std::span<const PairVector> predictions,
                                 std::span<const PairVector> references, std::string model_name,
                                 Direction direction) {
  std::unordered_map<std::string, const PairVector*> pred;
  for (const auto& p : predictions) {
    if (!pred.emplace(p.pair_id, &p).second) {
      throw DataError(fmt::format("duplicate prediction for pair {}", p.pair_id));
    }
  }
  if (pred.size() != references.size()) {
    throw DataError(fmt::format("pair_id mismatch: {} predictions, {} references", pred.size(),
                                references.size()));
  }
  EvaluationReport report;
  report.model = std::move(model_name);
  report.direction = direction;
  double sum = 0.0;
  for (const auto& ref : references) {
    const auto it = pred.find(ref.pair_id);
    if (it == pred.end()) throw DataError(fmt::format("no prediction for pair {}", ref.pair_id));
    const double e = dissimilarity(it->second->values, ref.values);
    report.per_pair.push_back({ref.pair_id, e});
    sum += e;
  }
  report.n_test = report.per_pair.size();
  report.average_error = report.n_test == 0 ? 0.0 : sum / static_cast<double>(report.n_test);
  return report;
}

inline EvaluationReport evaluate_naive(std::span<const PairVector> sources,
                                       std::span<const PairVector> references, Direction direction) {
  std::vector<PairVector> predictions;
  for (const auto& s : sources) predictions.push_back({s.pair_id, naive_predict(s.values)});
  return evaluate(predictions, references, "naive", direction);
}

inline EvaluationReport evaluate_linear(const LinearModel& model, std::span<const PairVector> sources,
                                        std::span<const PairVector> references) {
  std::vector<PairVector> predictions;
  for (const auto& s : sources) predictions.push_back({s.pair_id, predict(model, s.values)});
  return evaluate(predictions, references, "linear regression", model.direction);
}

/// One utterance_id per line; blank lines and '#' comments are skipped.
inline std::set<std::string> read_exclusion_list(std::istream& in) {
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto text = detail::chomp(line);
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty() || text.front() == '#') continue;
    ids.emplace(text);
  }
  return ids;
}

inline std::set<std::string> load_exclusion_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open exclusion list {}", path.string()));
  return read_exclusion_list(in);
}

/// Evaluates externally synthesized target-language audio. `synth_dir` holds
/// `<utterance_id>.wav` for each target utterance of the reference pairs,
/// except excluded utterance_ids. All files are treated as one synthetic voice
/// for normalization.
inline EvaluationReport eval_external_audio(const std::filesystem::path& synth_dir,
                                            const CorpusManifest& manifest, Direction direction,
                                            std::span<const PairVector> references,
                                            const std::set<std::string>& excluded,
                                            std::vector<std::string>* warnings = nullptr) {
  std::unordered_map<std::string, const MatchedPair*> pairs;
  for (const auto& p : manifest.pairs) pairs.emplace(p.pair_id, &p);

  std::vector<VoiceUtterance> audio;
  std::vector<PairVector> kept_refs;
  std::vector<std::string> kept_pairs;
  for (const auto& ref : references) {
    const auto it = pairs.find(ref.pair_id);
    if (it == pairs.end()) throw DataError(fmt::format("pair {} not in manifest", ref.pair_id));
    const auto& id = it->second->member(target_language(direction)).utterance_id;
    if (excluded.count(id)) continue;
    const auto path = synth_dir / (id + ".wav");
    if (!std::filesystem::exists(path)) {
      throw DataError(fmt::format("missing synthesized audio for {} ({})", id, path.string()));
    }
    audio.push_back({id, read_track(path, 0, id)});
    kept_refs.push_back(ref);
    kept_pairs.push_back(ref.pair_id);
  }
  std::vector<std::string> local_warnings;
  const auto norm = voice_group_vectors(audio, "synthesizer", local_warnings);
  if (warnings != nullptr) warnings->insert(warnings->end(), local_warnings.begin(), local_warnings.end());

  std::vector<PairVector> predictions;
  for (std::size_t i = 0; i < norm.vectors.size(); ++i) {
    predictions.push_back({kept_pairs[i], norm.vectors[i].values});
  }
  return evaluate(predictions, kept_refs, "synthesizer", direction);
}

inline void write_report(std::ostream& out, const EvaluationReport& r) {
  out << fmt::format("model: {}\ndirection: {}\ntest pairs: {}\naverage error: {:.6f}\n", r.model,
                     direction_label(r.direction), r.n_test, r.average_error);
}

inline void write_pair_errors_csv(std::ostream& out, const EvaluationReport& r) {
  out << "pair_id,error\n";
  for (const auto& e : r.per_pair) out << fmt::format("{},{}\n", e.pair_id, e.error);
}

// ---------------------------------------------------------------------------
// Coefficients

struct Coefficient {
  std::size_t target = 0;  // target dimension (row)
  std::size_t source = 0;  // input dimension (column)
  double weight = 0.0;
  std::string label;
};

inline std::string coefficient_label(Direction d, std::size_t target, std::size_t source,
                                     double weight) {
  return fmt::format("{} {} → {} {}: {}", language_code(source_language(d)),
                     feature_label(source), language_code(target_language(d)),
                     feature_label(target), weight);
}

/// The k largest-magnitude non-intercept weights, |w| descending, ties by label.
inline std::vector<Coefficient> top_coefficients(const LinearModel& model, std::size_t k) {
  std::vector<Coefficient> all;
  all.reserve(kNumDims * kNumDims);
  for (std::size_t i = 0; i < kNumDims; ++i) {
    for (std::size_t j = 0; j < kNumDims; ++j) {
      const double w = model.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      all.push_back({i, j, w, coefficient_label(model.direction, i, j, w)});
    }
  }
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const Coefficient& a, const Coefficient& b) {
                      const double fa = std::abs(a.weight), fb = std::abs(b.weight);
                      if (fa != fb) return fa > fb;
                      return a.label < b.label;
                    });
  all.resize(n);
  return all;
}

// ---------------------------------------------------------------------------
// Model file

inline nlohmann::json model_to_json(const LinearModel& model) {
  nlohmann::json j;
  j["direction"] = direction_code(model.direction);
  j["ridge_lambda"] = model.ridge_lambda;
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) row.push_back(model.weights(i, c));
    rows.push_back(std::move(row));
  }
  j["weights"] = std::move(rows);
  auto labels = nlohmann::json::array();
  for (std::size_t d = 0; d < kNumDims; ++d) labels.push_back(feature_label(d));
  j["feature_labels"] = std::move(labels);
  j["n_train"] = model.n_train;
  j["seed"] = model.seed;
  return j;
}

inline LinearModel model_from_json(const nlohmann::json& j, const std::string& source) {
  const auto fail = [&](const std::string& why) {
    return DataError(fmt::format("{}: {}", source, why));
  };
  try {
    LinearModel m;
    const auto dir = parse_direction(j.at("direction").get<std::string>());
    if (!dir) throw fail("unknown direction");
    m.direction = *dir;
    m.ridge_lambda = j.at("ridge_lambda").get<double>();
    m.n_train = j.at("n_train").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& rows = j.at("weights");
    if (!rows.is_array() || rows.size() != kNumDims) throw fail("weights must have 100 rows");
    m.weights.resize(kNumDims, kNumWeightCols);
    for (std::size_t i = 0; i < kNumDims; ++i) {
      const auto& row = rows[i];
      if (!row.is_array() || row.size() != kNumWeightCols) throw fail("weight rows must have 101 columns");
      for (std::size_t c = 0; c < kNumWeightCols; ++c) {
        m.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c].get<double>();
      }
    }
    const auto& labels = j.at("feature_labels");
    if (!labels.is_array() || labels.size() != kNumDims) throw fail("feature_labels must have 100 entries");
    for (std::size_t d = 0; d < kNumDims; ++d) {
      if (labels[d].get<std::string>() != feature_label(d)) {
        throw fail(fmt::format("feature label {} is '{}', expected '{}'", d,
                               labels[d].get<std::string>(), feature_label(d)));
      }
    }
    if (!m.weights.allFinite()) throw fail("non-finite weights");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const LinearModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << model_to_json(model).dump(1) << '\n';
}

inline LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return model_from_json(j, path.string());
}

}  // namespace prosody
