// Copyright 2026 The motlab Authors. All Rights Reserved.
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
// =============================================================================
// Drives the motlab executable end to end on a tiny configuration.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "motlab/classifier.hpp"
#include "motlab/corpus.hpp"
#include "motlab/eval.hpp"
#include "motlab/seqpolicy.hpp"

namespace motlab {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig = R"(# small enough to run in seconds
seed = 3
corpus.filler_vocab_size = 12
corpus.polarity_lexicon_size = 4
corpus.min_len = 3
corpus.max_len = 6
corpus.train = 120
corpus.dev = 30
corpus.test = 40
corpus.target_labeled = 200
model.d = 6
model.h = 8
model.max_len = 10
classifier.e = 6
classifier.epochs = 20
train.mle.epochs = 2
train.rl.epochs = 3
train.rl.k = 5
experiment.replicates = 1
experiment.ablation_fractions = 0.5,1
experiment.ablation_shuffles = 2
)";

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct Result {
  int status;
  std::string err;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("motlab_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    cfg_ = dir_ / "run.cfg";
    Spit(cfg_, std::string(kTinyConfig) + "out = " + (dir_ / "run").string() + "\n");
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  Result Run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(MOTLAB_CLI_PATH) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, Slurp(err), Slurp(out)};
  }
  Result RunCfg(const std::string& command, const std::string& extra = "") const {
    return Run(command + " --config " + cfg_.string() + " " + extra);
  }
  void Pipeline(const std::string& extra = "") const {
    for (const char* c : {"gen-corpus", "train-classifier", "train-generic"}) {
      const auto r = RunCfg(c, extra);
      ASSERT_EQ(r.status, 0) << c << ": " << r.err;
    }
  }
  fs::path run_dir() const { return dir_ / "run"; }

  // Every regular file under the run directory with its bytes.
  std::map<std::string, std::string> Snapshot() const {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(run_dir()))
      if (e.is_regular_file()) files[fs::relative(e.path(), run_dir()).string()] = Slurp(e.path());
    return files;
  }

  fs::path dir_, cfg_;
};

TEST_F(CliTest, ConfigIsRequired) {
  const auto r = Run("gen-corpus");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("--config"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownKeyIsNamed) {
  Spit(cfg_, Slurp(cfg_) + "train.rl.kk = 4\n");
  const auto r = RunCfg("gen-corpus");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("train.rl.kk"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(run_dir()));
}

TEST_F(CliTest, InvalidValueIsNamed) {
  Spit(cfg_, Slurp(cfg_) + "model.h = 0\n");
  const auto r = RunCfg("gen-corpus");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("model.h"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedLineIsRejected) {
  Spit(cfg_, Slurp(cfg_) + "this line has no equals sign\n");
  EXPECT_NE(RunCfg("gen-corpus").status, 0);
}

TEST_F(CliTest, MissingConfigFileIsNamed) {
  const auto r = Run("gen-corpus --config " + (dir_ / "nope.cfg").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("nope.cfg"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingUpstreamArtifactIsNamed) {
  const auto r = RunCfg("train-generic");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("source.vocab"), std::string::npos) << r.err;
  ASSERT_EQ(RunCfg("gen-corpus").status, 0);
  const auto f = RunCfg("finetune");
  EXPECT_NE(f.status, 0);
  EXPECT_NE(f.err.find("classifier.bin"), std::string::npos) << f.err;
}

TEST_F(CliTest, PipelineWritesHeadedArtifacts) {
  Pipeline();
  const auto r = RunCfg("finetune", "--strategy mo-reinforce --k 5");
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"generic.bin", "mo-reinforce.bin", "classifier.bin",
                        "source_classifier.bin", "config.resolved"})
    EXPECT_TRUE(fs::exists(run_dir() / f)) << f;

  const auto resolved = Slurp(run_dir() / "config.resolved");
  const auto hash_line = resolved.substr(0, resolved.find('\n'));
  ASSERT_EQ(hash_line.rfind("# config_hash=", 0), 0u);
  // Every text artifact carries the same hash.
  for (const auto& [name, text] : Snapshot()) {
    if (name.ends_with(".bin")) continue;
    EXPECT_NE(text.find(hash_line), std::string::npos) << name;
  }

  // One row per epoch after the metadata and header lines.
  std::istringstream log(Slurp(run_dir() / "rewards_mo-reinforce.csv"));
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(log, line)) {
    if (line.starts_with("#")) continue;
    if (!header) {
      EXPECT_EQ(line, "epoch,strategy,mean_reward,n_examples");
      header = true;
      continue;
    }
    ++rows;
    EXPECT_NE(line.find(",mo-reinforce,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_NE(resolved.find("train.rl.k = 5"), std::string::npos);
}

TEST_F(CliTest, SeedFlagOverridesAndIsRecorded) {
  ASSERT_EQ(RunCfg("gen-corpus", "--seed 41").status, 0);
  for (const auto& [name, text] : Snapshot()) {
    if (name == "config.resolved")
      EXPECT_NE(text.find("\nseed = 41\n"), std::string::npos);
    else
      EXPECT_NE(text.find("# seed=41\n"), std::string::npos) << name;
  }
  const auto a = Slurp(run_dir() / "corpus" / "train.tsv");
  ASSERT_EQ(RunCfg("gen-corpus").status, 0);
  EXPECT_NE(Slurp(run_dir() / "corpus" / "train.tsv"), a);
}

TEST_F(CliTest, CommandsAreIdempotent) {
  Pipeline();
  const auto before = Snapshot();
  Pipeline();
  EXPECT_EQ(Snapshot(), before);
}

TEST_F(CliTest, DimensionMismatchNamesKeyAndLeavesArtifacts) {
  Pipeline();
  const auto before = Snapshot();
  Spit(cfg_, Slurp(cfg_) + "model.h = 9\n");
  const auto r = RunCfg("finetune");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("model.h"), std::string::npos) << r.err;
  EXPECT_EQ(Snapshot(), before);

  Spit(cfg_, std::string(kTinyConfig) + "out = " + run_dir().string() +
                 "\nclassifier.e = 7\n");
  const auto e = RunCfg("evaluate", "--checkpoint " + (run_dir() / "generic.bin").string());
  EXPECT_NE(e.status, 0);
  EXPECT_NE(e.err.find("classifier.e"), std::string::npos) << e.err;
  EXPECT_EQ(Snapshot(), before);
}

TEST_F(CliTest, CorruptCheckpointIsRejected) {
  Pipeline();
  Spit(dir_ / "junk.bin", "not a checkpoint");
  const auto r = RunCfg("evaluate", "--checkpoint " + (dir_ / "junk.bin").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("junk.bin"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvaluateZeroPolicyFollowsTieRule) {
  Pipeline();
  std::ifstream sv(run_dir() / "corpus" / "source.vocab");
  std::ifstream tv(run_dir() / "corpus" / "target.vocab");
  const auto src = read_vocabulary(sv), tgt = read_vocabulary(tv);
  const auto zero = PolicyParams::zeros(src.size(), tgt.size(), 6, 8);
  {
    std::ofstream out(dir_ / "zero.bin", std::ios::binary);
    save_policy(out, zero);
  }
  const auto r = RunCfg("evaluate", "--checkpoint " + (dir_ / "zero.bin").string());
  ASSERT_EQ(r.status, 0) << r.err;

  std::ifstream ts(run_dir() / "corpus" / "test.tsv");
  const auto test = read_split(ts, src, tgt);
  std::vector<Polarity> golds, all_pos(test.size(), Polarity::Positive);
  for (const auto& e : test) golds.push_back(e.label);
  const double f1 = macro_f1(all_pos, golds);

  const auto csv = Slurp(run_dir() / "metrics_zero.csv");
  const std::string key = "zero,test,macro_f1,";
  const auto at = csv.find(key);
  ASSERT_NE(at, std::string::npos) << csv;
  EXPECT_EQ(std::stod(csv.substr(at + key.size())), f1);
  EXPECT_NE(csv.find("zero,test,bleu,0\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("zero,test,mean_reward,0.5\n"), std::string::npos) << csv;
  EXPECT_NE(r.out.find("distinct_outputs=1"), std::string::npos) << r.out;
}

TEST_F(CliTest, ExperimentIsByteIdenticalAcrossRuns) {
  auto run_into = [&](const std::string& sub) {
    const auto r = RunCfg("experiment", "--out " + (dir_ / sub).string());
    EXPECT_EQ(r.status, 0) << r.err;
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir_ / sub))
      files[e.path().filename().string()] = Slurp(e.path());
    return files;
  };
  const auto a = run_into("a"), b = run_into("b");
  for (const char* f : {"report.csv", "ablation.csv", "ablation.svg", "rewards_data1.csv",
                        "rewards_data0.05.csv", "rewards_data1_seed3.csv", "config.resolved"})
    EXPECT_TRUE(a.contains(f)) << f;
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, text] : a) {
    if (name == "config.resolved") continue;  // records --out
    EXPECT_EQ(text, b.at(name)) << name;
  }
}

TEST_F(CliTest, PlotRendersSvgNextToCsv) {
  Pipeline();
  ASSERT_EQ(RunCfg("finetune", "--strategy reinforce").status, 0);
  const auto csv = run_dir() / "rewards_reinforce.csv";
  const auto r = Run("plot " + csv.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto svg = Slurp(run_dir() / "rewards_reinforce.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("reinforce"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  Spit(dir_ / "bad.csv", "a,b\n1,2\n");
  EXPECT_NE(Run("plot " + (dir_ / "bad.csv").string()).status, 0);
  EXPECT_FALSE(fs::exists(dir_ / "bad.svg"));
}

}  // namespace
}  // namespace motlab
