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
#include "motlab/classifier.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "motlab/eval.hpp"

namespace motlab {
namespace {

struct Trained {
  Corpus corpus;
  ClassifierParams params;
  std::vector<double> loss;
};

const Trained& DefaultClassifier() {
  static const Trained t = [] {
    Trained out;
    out.corpus = generate_corpus(CorpusSpec{});
    const auto data = target_side(out.corpus.target_labeled);
    auto r = train_classifier(data, out.corpus.target_vocab.size(), ClassifierOptions{});
    out.params = std::move(r.params);
    out.loss = std::move(r.loss);
    return out;
  }();
  return t;
}

TEST(TrainClassifier, HeldOutAccuracyAndMacroF1) {
  const auto& t = DefaultClassifier();
  std::vector<Polarity> preds, golds;
  for (const auto& e : t.corpus.labeled_test) {
    preds.push_back(predict(t.params, *e.reference));
    golds.push_back(e.label);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(preds.size()), 0.95);
  EXPECT_GT(macro_f1(preds, golds), 0.95);
  EXPECT_LT(t.loss.back(), t.loss.front());
}

TEST(TrainClassifier, DeterministicInSeed) {
  const auto c = generate_corpus(CorpusSpec{});
  const auto data = target_side(c.target_labeled);
  ClassifierOptions opt;
  opt.epochs = 20;
  const auto a = train_classifier(data, c.target_vocab.size(), opt);
  const auto b = train_classifier(data, c.target_vocab.size(), opt);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loss, b.loss);
  opt.seed = 2;
  EXPECT_FALSE(train_classifier(data, c.target_vocab.size(), opt).params == a.params);
}

TEST(TrainClassifier, SingleClassIsAnError) {
  std::vector<LabeledSentence> data{{{4, 5}, Polarity::Positive},
                                    {{6}, Polarity::Positive}};
  EXPECT_THROW(train_classifier(data, 8, ClassifierOptions{}), std::invalid_argument);
}

TEST(ClassifyProb, ZeroParamsAreUniformAndPredictPositive) {
  const auto c = ClassifierParams::zeros(10, 4);
  for (const Sequence& s : {Sequence{4}, Sequence{5, 9, 1}, Sequence{0, 7, 7, 1}}) {
    EXPECT_EQ(classify_prob(c, s, Polarity::Positive), 0.5);
    EXPECT_EQ(classify_prob(c, s, Polarity::Negative), 0.5);
    EXPECT_EQ(predict(c, s), Polarity::Positive);
  }
}

TEST(ClassifyProb, ZeroHeadGivesHalfWithAnyEmbedding) {
  auto c = ClassifierParams::zeros(10, 4);
  Rng rng(4);
  for (Eigen::Index i = 0; i < c.embed.size(); ++i) c.embed.data()[i] = uniform(rng, -3, 3);
  const Sequence s{4, 8, 9, 1};
  EXPECT_EQ(classify_prob(c, s, Polarity::Positive), 0.5);
}

TEST(ClassifyProb, PoolingProperties) {
  const auto& t = DefaultClassifier();
  Rng rng(17);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& ref = *t.corpus.labeled_test[i].reference;
    const double p = classify_prob(t.params, ref, Polarity::Positive);
    const double n = classify_prob(t.params, ref, Polarity::Negative);
    EXPECT_NEAR(p + n, 1.0, 1e-15);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_EQ(p, classify_prob(t.params, ref, Polarity::Positive));

    Sequence doubled;
    for (TokenId tok : ref) doubled.insert(doubled.end(), {tok, tok});
    EXPECT_NEAR(classify_prob(t.params, doubled, Polarity::Positive), p, 1e-12);

    Sequence perm = ref;
    shuffle(std::span(perm), rng);
    EXPECT_NEAR(classify_prob(t.params, perm, Polarity::Positive), p, 1e-12);

    Sequence padded = ref;
    padded.insert(padded.begin(), special::kBos);
    padded.push_back(special::kPad);
    EXPECT_EQ(classify_prob(t.params, padded, Polarity::Positive), p);
  }
}

TEST(ClassifyProb, OnlySpecialsFallsBackToUniform) {
  const auto& t = DefaultClassifier();
  const Sequence s{special::kBos, special::kEos, special::kPad};
  const auto out = classify(t.params, s);
  EXPECT_TRUE(out.degenerate);
  EXPECT_EQ(out.probs[0], 0.5);
  EXPECT_EQ(predict(t.params, s), Polarity::Positive);
  EXPECT_FALSE(classify(t.params, *t.corpus.labeled_test[0].reference).degenerate);
}

TEST(Predict, ArgmaxOfProbabilities) {
  auto c = ClassifierParams::zeros(6, 1);
  c.bias << 0.0, std::log(9.0);  // P(positive) = 0.9
  const Sequence s{4};
  EXPECT_NEAR(classify_prob(c, s, Polarity::Positive), 0.9, 1e-12);
  EXPECT_EQ(predict(c, s), Polarity::Positive);
  c.bias << std::log(9.0), 0.0;
  EXPECT_EQ(predict(c, s), Polarity::Negative);
}

TEST(Checkpoint, ClassifierRoundTrip) {
  const auto& t = DefaultClassifier();
  std::stringstream ss;
  save_classifier(ss, t.params);
  EXPECT_EQ(load_classifier(ss), t.params);
  std::stringstream policy;
  save_policy(policy, PolicyParams::zeros(3, 3, 1, 1));
  EXPECT_THROW(load_classifier(policy), std::runtime_error);
}

}  // namespace
}  // namespace motlab
