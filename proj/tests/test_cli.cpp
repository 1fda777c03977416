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

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "prosody/cli.hpp"
#include "support/synthetic.hpp"

namespace prosody {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(testing::unique_temp_dir("cli"));
    corpus_ = new testing::SyntheticCorpus(testing::write_synthetic_corpus(*dir_ / "corpus", 4, 5, 77));
    const auto r = run_cli({"extract", "--manifest", corpus_->manifest_path.string(), "--audio-root",
                            corpus_->root.string(), "--out", features().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    std::filesystem::remove_all(*dir_);
    delete corpus_;
    delete dir_;
  }
  static std::filesystem::path features() { return *dir_ / "features.csv"; }
  static std::string manifest() { return corpus_->manifest_path.string(); }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static std::filesystem::path* dir_;
  static testing::SyntheticCorpus* corpus_;
};

std::filesystem::path* Cli::dir_ = nullptr;
testing::SyntheticCorpus* Cli::corpus_ = nullptr;

TEST_F(Cli, ExtractIsByteIdenticalAcrossRunsAndJobs) {
  const auto again = path("again.csv"), parallel = path("parallel.csv");
  ASSERT_EQ(run_cli({"extract", "--manifest", manifest(), "--audio-root", corpus_->root.string(), "--out", again}).code, 0);
  ASSERT_EQ(run_cli({"extract", "--manifest", manifest(), "--audio-root", corpus_->root.string(), "--out",
                     parallel, "--jobs", "3"})
                .code,
            0);
  const auto a = testing::read_text(features());
  EXPECT_EQ(a, testing::read_text(again));
  EXPECT_EQ(a, testing::read_text(parallel));
  const auto vecs = load_feature_csv(features());
  EXPECT_EQ(vecs.size(), corpus_->manifest.records.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) EXPECT_EQ(vecs[i].utterance_id, corpus_->manifest.records[i].utterance_id);
}

TEST_F(Cli, DumpFrames) {
  const auto dump = path("frames");
  const auto r = run_cli({"extract", "--manifest", manifest(), "--audio-root", corpus_->root.string(), "--out",
                          path("f2.csv"), "--dump-frames", dump});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dump)) {
    ++files;
    const auto text = testing::read_text(e.path());
    EXPECT_EQ(text.rfind("frame_idx,t_s,f0_hz,voicing,log_energy,spectral_flux,cpps_raw,envelope_rate\n", 0), 0u);
  }
  EXPECT_EQ(files, 8u);
}

TEST_F(Cli, DistanceAndNeighbors) {
  const auto& pairs = corpus_->manifest.pairs;
  const auto d = run_cli({"distance", "--features", features().string(), "--a", pairs[0].en.utterance_id, "--b",
                          pairs[1].en.utterance_id});
  ASSERT_EQ(d.code, 0) << d.err;
  const auto vecs = load_feature_csv(features());
  const auto find = [&](const std::string& id) -> const ProsodyVector& {
    return *std::find_if(vecs.begin(), vecs.end(), [&](const auto& v) { return v.utterance_id == id; });
  };
  EXPECT_EQ(d.out, fmt::format("{:.6f}\n", dissimilarity(find(pairs[0].en.utterance_id),
                                                        find(pairs[1].en.utterance_id))));

  const auto n = run_cli({"neighbors", "--features", features().string(), "--anchor", pairs[0].en.utterance_id,
                          "--k", "4"});
  ASSERT_EQ(n.code, 0) << n.err;
  std::istringstream in(n.out);
  std::string line;
  int similar = 0, dissimilar = 0;
  while (std::getline(in, line)) {
    if (line.rfind("similar ", 0) == 0) ++similar;
    if (line.rfind("dissimilar ", 0) == 0) ++dissimilar;
    if (line.rfind("similar", 0) == 0 || line.rfind("dissimilar", 0) == 0) {
      EXPECT_NE(line.find(" EN_"), std::string::npos) << "within-language pool: " << line;
    }
  }
  EXPECT_EQ(similar, 4);
  EXPECT_EQ(dissimilar, 4);
  const auto cross = run_cli({"neighbors", "--features", features().string(), "--anchor", pairs[0].en.utterance_id,
                              "--k", "39", "--cross-language"});
  EXPECT_EQ(cross.code, 0) << cross.err;
  const auto too_many = run_cli({"neighbors", "--features", features().string(), "--anchor",
                                 pairs[0].en.utterance_id, "--k", "20"});
  EXPECT_EQ(too_many.code, 2);
  EXPECT_EQ(run_cli({"distance", "--features", features().string(), "--a", "EN_nope", "--b", "EN_nope"}).code, 2);
}

TEST_F(Cli, Correlate) {
  const auto r = run_cli({"correlate", "--features", features().string(), "--manifest", manifest(), "--cross",
                          "--out", path("m.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("over 20 pairs"), std::string::npos) << r.out;
  const auto text = testing::read_text(path("m.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
  const auto w = run_cli({"correlate", "--features", features().string(), "--manifest", manifest(), "--within",
                          "en", "--out", path("w.csv")});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_NE(w.out.find("EN vs EN"), std::string::npos);
  EXPECT_EQ(run_cli({"correlate", "--features", features().string(), "--manifest", manifest(), "--out",
                     path("x.csv")})
                .code,
            1);
  EXPECT_EQ(run_cli({"correlate", "--features", features().string(), "--manifest", manifest(), "--cross",
                     "--within", "en", "--out", path("x.csv")})
                .code,
            1);
}

TEST_F(Cli, SplitFitEvaluateInspect) {
  const auto split = path("split.csv");
  auto r = run_cli({"split", "--manifest", manifest(), "--test-fraction", "0.25", "--seed", "5", "--out", split});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(testing::read_text(split),
            (run_cli({"split", "--manifest", manifest(), "--test-fraction", "0.25", "--seed", "5", "--out",
                      path("split2.csv")}),
             testing::read_text(path("split2.csv"))));

  const auto model = path("model.json");
  r = run_cli({"fit", "--features", features().string(), "--manifest", manifest(), "--split", split, "--direction",
               "en-es", "--ridge", "1.0", "--out", model});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);  // fewer than 101 training pairs

  const std::vector<std::string> common = {"--features", features().string(), "--manifest", manifest(), "--split", split};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = {"evaluate"};
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), common.begin(), common.end());
    return run_cli(args);
  };
  const auto en_es = with({"--naive", "--direction", "en-es", "--out", path("errors.csv")});
  const auto es_en = with({"--naive", "--direction", "es-en"});
  ASSERT_EQ(en_es.code, 0) << en_es.err;
  ASSERT_EQ(es_en.code, 0) << es_en.err;
  const auto avg = [](const std::string& text) {
    const auto pos = text.find("average error");
    return text.substr(pos, text.find('\n', pos) - pos);
  };
  EXPECT_EQ(avg(en_es.out), avg(es_en.out));
  EXPECT_EQ(testing::read_text(path("errors.csv")).rfind("pair_id,error\n", 0), 0u);

  const auto lin = with({"--model", model, "--direction", "en-es"});
  EXPECT_EQ(lin.code, 0) << lin.err;
  EXPECT_EQ(with({"--model", model, "--direction", "es-en"}).code, 2);
  EXPECT_EQ(with({"--model", model, "--naive", "--direction", "en-es"}).code, 1);
  EXPECT_EQ(with({"--direction", "en-es"}).code, 1);
  EXPECT_EQ(with({"--naive", "--direction", "sideways"}).code, 1);

  const auto ins = run_cli({"inspect", "--model", model, "--top", "3"});
  ASSERT_EQ(ins.code, 0) << ins.err;
  EXPECT_EQ(std::count(ins.out.begin(), ins.out.end(), '\n'), 3);
  EXPECT_EQ(ins.out.rfind("EN ", 0), 0u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"distance", "--features", features().string(), "--a", "x", "--b", "y", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({"distance", "--features", path("missing.csv"), "--a", "x", "--b", "y"}).code, 2);
  EXPECT_EQ(run_cli({"extract", "--manifest", path("missing.csv"), "--audio-root", ".", "--out", path("o.csv")}).code, 2);
  // Every pair links speakers in a ring: no split shares at most one speaker.
  std::string text = std::string(kManifestHeader) + "\n";
  const std::vector<std::string> ring = {"A", "B", "C", "D"};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      text += fmt::format("EN_{0}{1},{0}{1},EN,{2},e{0}{1},e{0}{1}.wav,0,0,1\nES_{0}{1},{0}{1},ES,{3},s{0}{1},s{0}{1}.wav,0,0,1\n", i, j,
                          ring[i], ring[j]);
    }
  }
  std::ofstream(path("ring.csv")) << text;
  const auto r = run_cli({"split", "--manifest", path("ring.csv"), "--seed", "1", "--max-retries", "5", "--out",
                          path("ring_split.csv")});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, HelpDocumentsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"extract", {"--manifest", "--audio-root", "--out", "--dump-frames", "--jobs", "--strict"}},
      {"distance", {"--features", "--a", "--b"}},
      {"neighbors", {"--features", "--anchor", "--k", "--cross-language"}},
      {"correlate", {"--features", "--manifest", "--cross", "--within", "--out", "--threshold", "--top"}},
      {"split", {"--manifest", "--test-fraction", "--seed", "--max-retries", "--out"}},
      {"fit", {"--features", "--manifest", "--split", "--direction", "--ridge", "--out"}},
      {"evaluate", {"--model", "--naive", "--synth-dir", "--exclude", "--features", "--manifest", "--split",
                    "--direction", "--partition", "--out"}},
      {"inspect", {"--model", "--top"}},
  };
  for (const auto& [cmd, list] : flags) {
    const auto r = run_cli({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : list) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

}  // namespace
}  // namespace prosody
