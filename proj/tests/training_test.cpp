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
#include "motlab/training.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "motlab/classifier.hpp"
#include "motlab/eval.hpp"
#include "test_support.hpp"

namespace motlab {
namespace {

using testing::ConstantReward;
using testing::DistinctTableReward;
using testing::Flatten;
using testing::LengthTwoSpace;
using testing::RandomParams;
using testing::VectorMoments;

TrainConfig TinyConfig() {
  TrainConfig c;
  c.lr = 1.0;
  c.k = 5;
  c.max_len = 2;
  return c;
}

std::vector<double> Diff(const PolicyParams& a, const PolicyParams& b) {
  auto fa = Flatten(a), fb = Flatten(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] -= fb[i];
  return fa;
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.k = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.lr = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.data_fraction = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_strategy("mo-reinforce"), Strategy::MoReinforce);
  EXPECT_THROW(parse_strategy("ppo"), std::invalid_argument);
}

TEST(SelectFraction, FloorOfSeededShufflePrefix) {
  std::vector<int> items(101);
  std::iota(items.begin(), items.end(), 0);
  const auto a = select_fraction<int>(items, 0.05, 9);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a, select_fraction<int>(items, 0.05, 9));
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 5u);
  const auto all = select_fraction<int>(items, 1.0, 9);
  EXPECT_EQ(std::vector<int>(all.begin(), all.begin() + 5), a);
  EXPECT_THROW(select_fraction<int>(items, 0.005, 9), std::invalid_argument);
}

TEST(TrainMle, ZeroLearningRateIsNullStep) {
  CorpusSpec spec;
  spec.sizes = {40, 4, 4, 4};
  const auto c = generate_corpus(spec);
  const auto theta = init_params(c.source_vocab.size(), c.target_vocab.size(), 4, 5, 3);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 2;
  const auto r = train_mle(theta, c.parallel_train, cfg);
  EXPECT_EQ(r.params, theta);
  EXPECT_EQ(r.epoch_logprob.size(), 2u);

  cfg.data_fraction = 0.05;
  EXPECT_EQ(train_mle(theta, c.parallel_train, cfg).n_examples, 2u);

  auto missing = c.parallel_train;
  missing[3].reference.reset();
  EXPECT_THROW(train_mle(theta, missing, cfg), std::invalid_argument);
}

TEST(TrainMle, ReproducesReferenceTokensOnHeldOutData) {
  const auto c = generate_corpus(CorpusSpec{});
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.epochs = 12;
  cfg.clip_norm = 5.0;
  const auto theta = init_params(c.source_vocab.size(), c.target_vocab.size(), 32, 64, 1);
  const auto r = train_mle(theta, c.parallel_train, cfg);
  EXPECT_GT(r.epoch_logprob.back(), r.epoch_logprob.front());
  const auto hyps = translate_all(r.params, c.labeled_test, DecodeOptions{});
  EXPECT_GE(token_accuracy(hyps, c.labeled_test), 0.8);
}

TEST(ReinforceStep, ZeroFeedbackLeavesThetaUnchanged) {
  const auto theta = RandomParams(6, 5, 3, 4, 1, 0.5);
  auto updated = theta;
  Rng rng(1);
  const Sequence x{4, 5, special::kEos};
  const auto cand =
      reinforce_step(updated, x, Polarity::Positive, ConstantReward{0.0}, rng, TinyConfig());
  EXPECT_EQ(updated, theta);
  EXPECT_EQ(cand.feedback, 0.0);
}

TEST(ReinforceStep, ConstantRewardHasZeroMeanUpdate) {
  const auto theta = RandomParams(5, 3, 2, 2, 21, 0.8);
  const Sequence x{4, special::kEos};
  Rng rng(5);
  VectorMoments m;
  for (int i = 0; i < 10000; ++i) {
    auto t = theta;
    reinforce_step(t, x, Polarity::Positive, ConstantReward{0.7}, rng, TinyConfig());
    m.add(Diff(t, theta));
  }
  for (std::size_t i = 0; i < m.sum.size(); ++i)
    EXPECT_LE(std::abs(m.mean(i)), 3 * m.sem(i) + 1e-12) << "component " << i;
}

TEST(ReinforceStep, AverageUpdateMatchesExactGradient) {
  const auto theta = RandomParams(5, 3, 2, 2, 33, 0.8);
  const Sequence x{4, 4, special::kEos};
  const auto reward = DistinctTableReward();
  const auto exact =
      Flatten(exact_expected_reward_gradient(theta, x, Polarity::Positive, reward, 2));
  Rng rng(8);
  VectorMoments m;
  for (int i = 0; i < 50000; ++i) {
    auto t = theta;
    reinforce_step(t, x, Polarity::Positive, reward, rng, TinyConfig());
    m.add(Diff(t, theta));
  }
  for (std::size_t i = 0; i < exact.size(); ++i)
    EXPECT_LE(std::abs(m.mean(i) - exact[i]), 3 * m.sem(i) + 1e-12) << "component " << i;
}

TEST(ReinforceStep, OnlyTouchesReachableSourceRows) {
  const auto theta = RandomParams(9, 6, 3, 4, 4, 0.5);
  auto t = theta;
  Rng rng(2);
  const Sequence x{5, 7, special::kEos};
  TrainConfig cfg = TinyConfig();
  cfg.max_len = 5;
  reinforce_step(t, x, Polarity::Positive, ConstantReward{0.5}, rng, cfg);
  for (Eigen::Index row = 0; row < 9; ++row) {
    const bool used = row == 5 || row == 7 || row == special::kEos;
    EXPECT_EQ(t.src_embed.row(row) == theta.src_embed.row(row), !used) << row;
  }
}

TEST(ReinforceStep, BaselineSubtractsRunningMean) {
  TrainConfig cfg;
  cfg.baseline = true;
  RewardBaseline b;
  EXPECT_DOUBLE_EQ(detail::advantage(0.8, cfg, b), 0.8);
  EXPECT_DOUBLE_EQ(detail::advantage(0.4, cfg, b), 0.4 - 0.8);
  EXPECT_DOUBLE_EQ(detail::advantage(0.9, cfg, b), 0.9 - 0.6);
  cfg.baseline = false;
  EXPECT_DOUBLE_EQ(detail::advantage(0.9, cfg, b), 0.9);
}

TEST(MoReinforce, KOneMatchesSingleSample) {
  const auto theta = RandomParams(6, 6, 3, 4, 10, 0.7);
  const Sequence x{4, 5, special::kEos};
  const auto reward = ConstantReward{0.3};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    const auto sel = mo_reinforce_select(theta, x, Polarity::Negative, 1, reward, a, 6);
    const auto smp = sample_multinomial(theta, x, b, 6);
    EXPECT_EQ(sel.tokens, smp.tokens);
    EXPECT_EQ(sel.logprob, smp.logprob);
    EXPECT_EQ(a, b);

    TrainConfig cfg;
    cfg.k = 1;
    cfg.lr = 0.5;
    cfg.max_len = 6;
    auto t1 = theta, t2 = theta;
    Rng c(seed), d(seed);
    const auto c1 = mo_reinforce_step(t1, x, Polarity::Positive, reward, c, cfg);
    const auto c2 = reinforce_step(t2, x, Polarity::Positive, reward, d, cfg);
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(c1.tokens, c2.tokens);
  }
}

TEST(MoReinforce, SelectedFeedbackIsPoolMaximum) {
  const auto theta = RandomParams(5, 3, 2, 3, 12, 1.0);
  const Sequence x{4, special::kEos};
  const auto reward = DistinctTableReward();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto pool = sample_and_score(theta, x, Polarity::Positive, 5, reward, rng, 2);
    ASSERT_EQ(pool.candidates.size(), 5u);
    double best = -1;
    for (const auto& c : pool.candidates) best = std::max(best, *c.feedback);
    EXPECT_EQ(*pool.selected().feedback, best);
    for (std::size_t j = 0; j < pool.best; ++j)
      EXPECT_LT(*pool.candidates[j].feedback, best);
  }
}

TEST(MoReinforce, ArgmaxInvariantToPositiveScaling) {
  const auto theta = RandomParams(5, 3, 2, 3, 13, 1.0);
  const Sequence x{4, special::kEos};
  const auto reward = DistinctTableReward();
  auto scaled = [&](std::span<const TokenId> y, Polarity l) { return 3.7 * reward(y, l); };
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_EQ(sample_and_score(theta, x, Polarity::Positive, 5, reward, a, 2).best,
              sample_and_score(theta, x, Polarity::Positive, 5, scaled, b, 2).best);
  }
}

TEST(MoReinforce, ZeroLearningRateStillSelects) {
  const auto theta = RandomParams(5, 3, 2, 3, 14, 1.0);
  auto t = theta;
  TrainConfig cfg = TinyConfig();
  cfg.lr = 0.0;
  Rng rng(1);
  const Sequence x{4, special::kEos};
  const auto c = mo_reinforce_step(t, x, Polarity::Positive, DistinctTableReward(), rng, cfg);
  EXPECT_EQ(t, theta);
  EXPECT_TRUE(c.feedback.has_value());
  EXPECT_FALSE(c.tokens.empty());
}

TEST(MoReinforce, LargePoolFindsRewardArgmaxMoreOften) {
  const auto theta = RandomParams(5, 3, 2, 3, 15, 1.0);
  const Sequence x{4, special::kEos};
  const auto reward = DistinctTableReward();
  Sequence argmax;
  double best = -1, p_best = 0;
  for (const auto& y : LengthTwoSpace()) {
    const double r = reward(y, Polarity::Positive);
    if (r > best) best = r, argmax = y, p_best = std::exp(forward_logprob(theta, x, y));
  }
  ASSERT_LT(p_best, 0.5);
  Rng rng(99);
  int hits = 0;
  constexpr int kTrials = 10000;
  for (int i = 0; i < kTrials; ++i)
    hits += mo_reinforce_select(theta, x, Polarity::Positive, 64, reward, rng, 2).tokens == argmax;
  const double rate = static_cast<double>(hits) / kTrials;
  EXPECT_GT(rate, p_best);
  EXPECT_NEAR(rate, 1.0 - std::pow(1.0 - p_best, 64), 0.02);
}

TEST(MoReinforce, BestOfFiveDominatesSingleSample) {
  CorpusSpec spec;
  spec.sizes = {4, 200, 4, 400};
  const auto c = generate_corpus(spec);
  ClassifierOptions opt;
  opt.epochs = 50;
  const auto cls = train_classifier(target_side(c.target_labeled), c.target_vocab.size(), opt);
  const auto theta = init_params(c.source_vocab.size(), c.target_vocab.size(), 8, 8, 5);
  const ClassifierReward reward{&cls.params};
  double sum = 0, sum_sq = 0;
  constexpr int kTrials = 2000;
  for (int i = 0; i < kTrials; ++i) {
    const auto& ex = c.labeled_dev[static_cast<std::size_t>(i) % c.labeled_dev.size()];
    Rng a(derive_seed(17, "trial", static_cast<std::uint64_t>(i)));
    Rng b = a;
    const double five = *mo_reinforce_select(theta, ex.source, ex.label, 5, reward, a, 8).feedback;
    const double one = *mo_reinforce_select(theta, ex.source, ex.label, 1, reward, b, 8).feedback;
    EXPECT_GE(five, one);
    sum += five - one;
    sum_sq += (five - one) * (five - one);
  }
  const double mean = sum / kTrials;
  const double sem = std::sqrt((sum_sq / kTrials - mean * mean) / (kTrials - 1));
  EXPECT_GT(mean, 3 * sem);
}

class RunRlTest : public ::testing::Test {
 protected:
  void SetUp() override {
    CorpusSpec spec;
    spec.sizes = {4, 30, 4, 200};
    corpus_ = generate_corpus(spec);
    ClassifierOptions opt;
    opt.epochs = 30;
    classifier_ = train_classifier(target_side(corpus_.target_labeled),
                                   corpus_.target_vocab.size(), opt)
                      .params;
    dev_ = oversample_minority(corpus_.labeled_dev);
    theta_ = init_params(corpus_.source_vocab.size(), corpus_.target_vocab.size(), 4, 6, 2);
    config_.epochs = 3;
    config_.max_len = 10;
    config_.lr = 0.05;
  }

  Corpus corpus_;
  ClassifierParams classifier_;
  std::vector<LabeledParallelExample> dev_;
  PolicyParams theta_;
  TrainConfig config_;
};

TEST_F(RunRlTest, LogShapeAndBounds) {
  for (Strategy s : {Strategy::Reinforce, Strategy::MoReinforce}) {
    const auto r = run_rl(theta_, dev_, ClassifierReward{&classifier_}, config_, s);
    ASSERT_EQ(r.log.epochs(), 3u);
    EXPECT_EQ(r.log.strategy, s);
    for (std::size_t e = 0; e < 3; ++e) {
      EXPECT_GE(r.log.mean_reward[e], 0.0);
      EXPECT_LE(r.log.mean_reward[e], 1.0);
      EXPECT_EQ(r.log.n_examples[e], dev_.size());
    }
    EXPECT_FALSE(r.params == theta_);
  }
}

TEST_F(RunRlTest, DeterministicAndClassifierFrozen) {
  const auto before = classifier_;
  const auto a = run_rl(theta_, dev_, ClassifierReward{&classifier_}, config_,
                        Strategy::MoReinforce);
  const auto b = run_rl(theta_, dev_, ClassifierReward{&classifier_}, config_,
                        Strategy::MoReinforce);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.log.mean_reward, b.log.mean_reward);
  EXPECT_EQ(classifier_, before);
  config_.seed = 2;
  EXPECT_FALSE(run_rl(theta_, dev_, ClassifierReward{&classifier_}, config_,
                      Strategy::MoReinforce)
                   .params == a.params);
}

TEST_F(RunRlTest, RewardCsvFormat) {
  const auto r = run_rl(theta_, dev_, ClassifierReward{&classifier_}, config_,
                        Strategy::Reinforce);
  std::ostringstream os;
  write_reward_csv_header(os);
  write_reward_csv_rows(os, r.log);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "epoch,strategy,mean_reward,n_examples");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",reinforce,", 0), 0u) << line;
  }
  EXPECT_EQ(rows, 3);
}

TEST(ClipGradient, BoundsTheNorm) {
  auto g = RandomParams(5, 5, 3, 3, 1, 2.0);
  clip_gradient(g, 1.5);
  EXPECT_NEAR(std::sqrt(squared_norm(g)), 1.5, 1e-12);
  auto small = RandomParams(5, 5, 3, 3, 1, 1e-4);
  const auto copy = small;
  clip_gradient(small, 1.5);
  EXPECT_EQ(small, copy);
}

}  // namespace
}  // namespace motlab
