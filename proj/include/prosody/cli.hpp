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

// Command-line driver: extract -> correlate -> split -> fit -> evaluate, plus
// distance / neighbors / inspect queries.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 constraint failure.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "prosody/prosody.hpp"

namespace prosody::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kConstraint = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  return out;
}

inline void log_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

inline void log_rejected(std::ostream& err, const CorpusManifest& m) {
  for (const auto& r : m.rejected) err << "rejected: " << r << '\n';
}

inline Direction direction_or_throw(const std::string& s) {
  const auto d = parse_direction(s);
  if (!d) throw UsageError(fmt::format("--direction must be en-es or es-en, got '{}'", s));
  return *d;
}

inline const ProsodyVector& find_vector(const std::vector<ProsodyVector>& vs, const std::string& id) {
  const auto it = std::find_if(vs.begin(), vs.end(), [&](const auto& v) { return v.utterance_id == id; });
  if (it == vs.end()) throw DataError(fmt::format("utterance {} not in feature file", id));
  return *it;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Utterance prosody representation, dissimilarity, and prosody-transfer baselines",
               "prosody"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string manifest_path, audio_root, out_path, features_path, split_path, model_path;
  std::string direction_text, anchor, id_a, id_b, within, synth_dir, exclude_path, dump_dir;
  std::string partition = "test";
  bool strict = false, cross = false, cross_language = false, naive = false;
  unsigned jobs = 1;
  std::size_t k = 4, top = 10;
  double threshold = 0.3, ridge = 0.0, test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t max_retries = 100;

  const auto add_strict = [&](CLI::App* sub) {
    sub->add_flag("--strict", strict, "Fail on utterances shorter than 0.5 s instead of dropping their pair");
  };

  auto* extract = app.add_subcommand("extract", "Compute prosody vectors for every manifest utterance");
  extract->add_option("--manifest", manifest_path, "Corpus manifest CSV")->required();
  extract->add_option("--audio-root", audio_root, "Directory the manifest audio paths are relative to")->required();
  extract->add_option("--out", out_path, "Output feature CSV")->required();
  extract->add_option("--dump-frames", dump_dir, "Also write per-track frame CSVs to this directory");
  extract->add_option("--jobs", jobs, "Tracks processed in parallel")->check(CLI::PositiveNumber);
  add_strict(extract);

  auto* distance = app.add_subcommand("distance", "Dissimilarity between two utterances");
  distance->add_option("--features", features_path, "Feature CSV")->required();
  distance->add_option("--a", id_a, "First utterance_id")->required();
  distance->add_option("--b", id_b, "Second utterance_id")->required();

  auto* neighbors_cmd = app.add_subcommand("neighbors", "Most similar and most dissimilar utterances for an anchor");
  neighbors_cmd->add_option("--features", features_path, "Feature CSV")->required();
  neighbors_cmd->add_option("--anchor", anchor, "Anchor utterance_id")->required();
  neighbors_cmd->add_option("--k", k, "Utterances per block")->check(CLI::PositiveNumber);
  neighbors_cmd->add_flag("--cross-language", cross_language, "Search both languages, not only the anchor's");

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation matrix over matched pairs");
  correlate->add_option("--features", features_path, "Feature CSV")->required();
  correlate->add_option("--manifest", manifest_path, "Corpus manifest CSV")->required();
  auto* cross_flag = correlate->add_flag("--cross", cross, "EN features (rows) vs ES features (columns)");
  auto* within_opt = correlate->add_option("--within", within, "One language against itself")
                         ->check(CLI::IsMember({"en", "es", "EN", "ES"}));
  cross_flag->excludes(within_opt);
  correlate->add_option("--out", out_path, "Output matrix CSV")->required();
  correlate->add_option("--threshold", threshold, "Diagonal summary threshold");
  correlate->add_option("--top", top, "Off-diagonal entries listed in the summary");
  add_strict(correlate);

  auto* split = app.add_subcommand("split", "Speaker-aware train/test split of the pairs");
  split->add_option("--manifest", manifest_path, "Corpus manifest CSV")->required();
  split->add_option("--test-fraction", test_fraction, "Target share of pairs in the test set");
  split->add_option("--seed", seed, "Shuffle seed")->required();
  split->add_option("--max-retries", max_retries, "Seeds tried after the first before giving up");
  split->add_option("--out", out_path, "Output split CSV")->required();
  add_strict(split);

  auto* fit = app.add_subcommand("fit", "Train the linear prosody-transfer model");
  fit->add_option("--features", features_path, "Feature CSV")->required();
  fit->add_option("--manifest", manifest_path, "Corpus manifest CSV (pair membership)")->required();
  fit->add_option("--split", split_path, "Split CSV; trains on the train partition")->required();
  fit->add_option("--direction", direction_text, "en-es or es-en")->required();
  fit->add_option("--ridge", ridge, "Ridge penalty on non-intercept weights")->check(CLI::NonNegativeNumber);
  fit->add_option("--out", out_path, "Output model JSON")->required();
  add_strict(fit);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Average error of a model on a partition");
  auto* model_opt = evaluate_cmd->add_option("--model", model_path, "Linear model JSON");
  auto* naive_flag = evaluate_cmd->add_flag("--naive", naive, "Identity model");
  auto* synth_opt = evaluate_cmd->add_option("--synth-dir", synth_dir, "Directory of <utterance_id>.wav renderings");
  model_opt->excludes(naive_flag)->excludes(synth_opt);
  naive_flag->excludes(synth_opt);
  evaluate_cmd->add_option("--exclude", exclude_path, "Utterance_ids to skip (with --synth-dir)")->needs(synth_opt);
  evaluate_cmd->add_option("--features", features_path, "Feature CSV")->required();
  evaluate_cmd->add_option("--manifest", manifest_path, "Corpus manifest CSV (pair membership)")->required();
  evaluate_cmd->add_option("--split", split_path, "Split CSV")->required();
  evaluate_cmd->add_option("--direction", direction_text, "en-es or es-en")->required();
  evaluate_cmd->add_option("--partition", partition, "Partition to evaluate")->check(CLI::IsMember({"test", "train"}));
  evaluate_cmd->add_option("--out", out_path, "Per-pair error CSV");
  add_strict(evaluate_cmd);

  auto* inspect = app.add_subcommand("inspect", "Largest-magnitude linear model coefficients");
  inspect->add_option("--model", model_path, "Linear model JSON")->required();
  inspect->add_option("--top", top, "Coefficients listed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  const ManifestOptions manifest_options{strict};
  try {
    if (*extract) {
      const auto manifest = load_manifest(manifest_path, manifest_options);
      detail::log_rejected(err, manifest);
      ExtractOptions options;
      options.audio_root = audio_root;
      options.jobs = jobs;
      if (!dump_dir.empty()) options.dump_frames_dir = dump_dir;
      const auto result = extract_features(manifest, options);
      detail::log_warnings(err, result.warnings);
      auto file = detail::open_output(out_path);
      write_feature_csv(file, result.vectors);
      err << fmt::format("wrote {} utterances ({} pairs, {} speakers) to {}\n", manifest.stats.utterances,
                         manifest.stats.pairs, manifest.stats.speakers, out_path);
    } else if (*distance) {
      const auto vectors = load_feature_csv(features_path);
      out << fmt::format("{:.6f}\n", dissimilarity(detail::find_vector(vectors, id_a),
                                                   detail::find_vector(vectors, id_b)));
    } else if (*neighbors_cmd) {
      const auto vectors = load_feature_csv(features_path);
      const auto& a = detail::find_vector(vectors, anchor);
      const std::string lang = a.utterance_id.substr(0, 2);
      std::vector<ProsodyVector> pool;
      for (const auto& v : vectors) {
        if (v.utterance_id == a.utterance_id) continue;
        if (!cross_language && v.utterance_id.substr(0, 2) != lang) continue;
        pool.push_back(v);
      }
      const auto result = neighbors(a, pool, k);
      out << fmt::format("anchor {}\n", a.utterance_id);
      out << fmt::format("{:<10} {:<20} {:>14} {:>5}\n", "role", "utterance_id", "dissimilarity", "rank");
      for (const auto& n : result.similar) {
        out << fmt::format("{:<10} {:<20} {:>14.6f} {:>5}\n", "similar", n.utterance_id, n.dissimilarity, n.rank);
      }
      for (const auto& n : result.dissimilar) {
        out << fmt::format("{:<10} {:<20} {:>14.6f} {:>5}\n", "dissimilar", n.utterance_id, n.dissimilarity, n.rank);
      }
    } else if (*correlate) {
      if (!cross && within.empty()) throw UsageError("correlate needs --cross or --within en|es");
      const auto manifest = load_manifest(manifest_path, manifest_options);
      detail::log_rejected(err, manifest);
      const auto vectors = load_feature_csv(features_path);
      const FeatureIndex index(vectors);
      const auto ids = all_pair_ids(manifest);
      Language rows_lang = Language::kEN, cols_lang = Language::kES;
      if (!cross) rows_lang = cols_lang = *parse_language(within == "en" || within == "EN" ? "EN" : "ES");
      const auto x = pair_vectors(manifest, index, ids, rows_lang);
      const auto y = pair_vectors(manifest, index, ids, cols_lang);
      const auto m = correlation_matrix(x, rows_lang, y, cols_lang);
      auto file = detail::open_output(out_path);
      write_matrix_csv(file, m);
      write_summary(out, m, summarize_diagonal(m, threshold, top));
    } else if (*split) {
      const auto manifest = load_manifest(manifest_path, manifest_options);
      detail::log_rejected(err, manifest);
      const auto spec = split_pairs(manifest.pairs, test_fraction, seed, max_retries);
      if (spec.effective_seed != spec.seed) {
        err << fmt::format("note: seed {} violated the shared-speaker bound; used seed {}\n", spec.seed,
                           spec.effective_seed);
      }
      auto file = detail::open_output(out_path);
      write_split_csv(file, spec, manifest.pairs);
      err << fmt::format("train {} pairs, test {} pairs, {} shared speaker(s)\n", spec.train.size(),
                         spec.test.size(), spec.shared_speakers.size());
    } else if (*fit) {
      const Direction dir = detail::direction_or_throw(direction_text);
      const auto manifest = load_manifest(manifest_path, manifest_options);
      detail::log_rejected(err, manifest);
      const auto vectors = load_feature_csv(features_path);
      const FeatureIndex index(vectors);
      const auto spec = load_split_csv(split_path);
      const auto model = fit_linear(manifest, index, spec.train, dir, ridge, spec.effective_seed);
      detail::log_warnings(err, model.warnings);
      save_model(out_path, model);
    } else if (*evaluate_cmd) {
      const int chosen = (model_path.empty() ? 0 : 1) + (naive ? 1 : 0) + (synth_dir.empty() ? 0 : 1);
      if (chosen != 1) throw UsageError("evaluate needs exactly one of --model, --naive, --synth-dir");
      const Direction dir = detail::direction_or_throw(direction_text);
      const auto manifest = load_manifest(manifest_path, manifest_options);
      detail::log_rejected(err, manifest);
      const auto vectors = load_feature_csv(features_path);
      const FeatureIndex index(vectors);
      const auto spec = load_split_csv(split_path);
      const auto& ids = partition == "train" ? spec.train : spec.test;
      const auto sources = pair_vectors(manifest, index, ids, source_language(dir));
      const auto references = pair_vectors(manifest, index, ids, target_language(dir));
      EvaluationReport report;
      if (naive) {
        report = evaluate_naive(sources, references, dir);
      } else if (!model_path.empty()) {
        const auto model = load_model(model_path);
        if (model.direction != dir) {
          throw DataError(fmt::format("model direction {} does not match --direction {}",
                                      direction_code(model.direction), direction_code(dir)));
        }
        report = evaluate_linear(model, sources, references);
      } else {
        std::set<std::string> excluded;
        if (!exclude_path.empty()) excluded = load_exclusion_list(exclude_path);
        std::vector<std::string> warnings;
        report = eval_external_audio(synth_dir, manifest, dir, references, excluded, &warnings);
        detail::log_warnings(err, warnings);
        err << "note: synthesized utterances are normalized as one track per voice, so errors "
               "include normalization-context differences\n";
      }
      write_report(out, report);
      if (!out_path.empty()) {
        auto file = detail::open_output(out_path);
        write_pair_errors_csv(file, report);
      }
    } else if (*inspect) {
      const auto model = load_model(model_path);
      for (const auto& c : top_coefficients(model, top)) out << c.label << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConstraintError& e) {
    err << "error: " << e.what() << '\n';
    return kConstraint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kSuccess;
}

}  // namespace prosody::cli
