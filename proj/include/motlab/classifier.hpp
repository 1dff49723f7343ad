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
#ifndef MOTLAB_CLASSIFIER_HPP_
#define MOTLAB_CLASSIFIER_HPP_

// Frozen sentiment oracle: mean-pooled token embeddings followed by an affine
// two-class softmax. BOS/EOS/PAD never contribute to the pooled vector.

#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "motlab/binary_io.hpp"
#include "motlab/corpus.hpp"
#include "motlab/random.hpp"
#include "motlab/seqpolicy.hpp"

namespace motlab {

struct ClassifierParams {
  Matrix embed;  // vocab x e
  Matrix head;   // e x 2, column k scores class k (0 = negative, 1 = positive)
  Vector bias;   // 2

  Eigen::Index vocab_size() const { return embed.rows(); }
  Eigen::Index embed_dim() const { return embed.cols(); }

  static ClassifierParams zeros(Eigen::Index vocab, Eigen::Index e) {
    if (vocab < 1 || e < 1)
      throw std::invalid_argument("classifier dimensions must be >= 1");
    return {Matrix::Zero(vocab, e), Matrix::Zero(e, 2), Vector::Zero(2)};
  }

  bool operator==(const ClassifierParams& o) const {
    return embed.rows() == o.embed.rows() && embed.cols() == o.embed.cols() &&
           embed == o.embed && head == o.head && bias == o.bias;
  }
};

struct LabeledSentence {
  Sequence tokens;
  Polarity label;
};

struct ClassifierOutput {
  std::array<double, 2> probs{0.5, 0.5};  // indexed by Polarity
  bool degenerate = false;                // no pooled tokens: uniform fallback
};

namespace detail {

inline bool pool(const ClassifierParams& c, std::span<const TokenId> sentence,
                 Vector& mean, std::size_t& count) {
  mean = Vector::Zero(c.embed_dim());
  count = 0;
  for (TokenId id : sentence) {
    if (id == special::kBos || id == special::kEos || id == special::kPad) continue;
    if (id < 0 || id >= c.vocab_size())
      throw std::out_of_range("classifier: token id " + std::to_string(id) +
                              " outside vocabulary");
    mean += c.embed.row(id).transpose();
    ++count;
  }
  if (count == 0) return false;
  mean /= static_cast<double>(count);
  return true;
}

inline std::array<double, 2> two_class_softmax(const Vector& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace detail

inline ClassifierOutput classify(const ClassifierParams& c,
                                 std::span<const TokenId> sentence) {
  Vector mean;
  std::size_t count;
  ClassifierOutput out;
  if (!detail::pool(c, sentence, mean, count)) {
    out.degenerate = true;
    SPDLOG_DEBUG("classifier: sentence has no scorable tokens, uniform fallback");
    return out;
  }
  const Vector logits = c.head.transpose() * mean + c.bias;
  out.probs = detail::two_class_softmax(logits);
  return out;
}

/// P_class(label | sentence).
inline double classify_prob(const ClassifierParams& c,
                            std::span<const TokenId> sentence, Polarity label) {
  return classify(c, sentence).probs[static_cast<int>(label)];
}

/// Argmax class; an exact tie resolves to Positive.
inline Polarity predict(const ClassifierParams& c,
                        std::span<const TokenId> sentence) {
  const auto out = classify(c, sentence);
  const double neg = out.probs[0];
  const double pos = out.probs[1];
  if (pos == neg) SPDLOG_DEBUG("classifier: tie resolved to positive");
  return pos >= neg ? Polarity::Positive : Polarity::Negative;
}

struct ClassifierOptions {
  Eigen::Index embed_dim = 16;
  std::size_t epochs = 200;
  double lr = 1.0;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
};

struct ClassifierTraining {
  ClassifierParams params;
  std::vector<double> loss;  // mean cross-entropy before each epoch's update
};

/// Full-batch gradient descent on mean cross-entropy.
inline ClassifierTraining train_classifier(std::span<const LabeledSentence> data,
                                           Eigen::Index vocab_size,
                                           const ClassifierOptions& opt) {
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& s : data) (s.label == Polarity::Positive ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw std::invalid_argument("train_classifier: data must contain both classes");
  if (!(opt.lr >= 0.0)) throw std::invalid_argument("train_classifier: lr must be >= 0");

  ClassifierTraining out;
  auto& c = out.params;
  c = ClassifierParams::zeros(vocab_size, opt.embed_dim);
  Rng rng(opt.seed);
  for (double& v : std::span(c.embed.data(), static_cast<std::size_t>(c.embed.size())))
    v = uniform(rng, -opt.init_scale, opt.init_scale);
  for (double& v : std::span(c.head.data(), static_cast<std::size_t>(c.head.size())))
    v = uniform(rng, -opt.init_scale, opt.init_scale);

  // Pre-strip once; degenerate sentences carry no signal and are skipped.
  std::vector<std::pair<Sequence, int>> rows;
  for (const auto& s : data) {
    auto toks = strip_specials(s.tokens);
    if (!toks.empty()) rows.emplace_back(std::move(toks), static_cast<int>(s.label));
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  Matrix g_embed = Matrix::Zero(c.embed.rows(), c.embed.cols());
  Matrix g_head = Matrix::Zero(c.head.rows(), 2);
  Vector g_bias = Vector::Zero(2);
  Vector mean;
  std::size_t count;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    g_embed.setZero();
    g_head.setZero();
    g_bias.setZero();
    double loss = 0.0;
    for (const auto& [toks, label] : rows) {
      detail::pool(c, toks, mean, count);
      const Vector logits = c.head.transpose() * mean + c.bias;
      const auto probs = detail::two_class_softmax(logits);
      loss -= std::log(probs[label]);
      Vector dlogits(2);
      dlogits << probs[0], probs[1];
      dlogits[label] -= 1.0;
      g_head.noalias() += mean * dlogits.transpose();
      g_bias += dlogits;
      const Vector dmean = c.head * dlogits / static_cast<double>(count);
      for (TokenId id : toks) g_embed.row(id) += dmean.transpose();
    }
    loss *= inv_n;
    if (!out.loss.empty() && loss > out.loss.back())
      spdlog::warn("train_classifier: loss increased at epoch {} ({} -> {})", epoch,
                   out.loss.back(), loss);
    out.loss.push_back(loss);
    c.embed -= opt.lr * inv_n * g_embed;
    c.head -= opt.lr * inv_n * g_head;
    c.bias -= opt.lr * inv_n * g_bias;
  }
  if (!out.loss.empty())
    spdlog::debug("train_classifier: loss {:.4f} -> {:.4f} over {} epochs",
                  out.loss.front(), out.loss.back(), opt.epochs);
  return out;
}

/// Labeled target-side sentences (references) of a split.
inline std::vector<LabeledSentence> target_side(
    std::span<const LabeledParallelExample> split) {
  std::vector<LabeledSentence> out;
  for (const auto& e : split) {
    if (!e.reference)
      throw std::invalid_argument("target_side: example lacks a reference");
    out.push_back({*e.reference, e.label});
  }
  return out;
}

inline std::vector<LabeledSentence> source_side(
    std::span<const LabeledParallelExample> split) {
  std::vector<LabeledSentence> out;
  for (const auto& e : split) out.push_back({e.source, e.label});
  return out;
}

/// Reward callable: (candidate tokens, gold label) -> feedback in [0, 1].
template <class R>
concept RewardModel = requires(const R& r, std::span<const TokenId> s, Polarity l) {
  { r(s, l) } -> std::convertible_to<double>;
};

/// Adapts a frozen classifier to the reward interface: P_class(label | c).
struct ClassifierReward {
  const ClassifierParams* params;

  double operator()(std::span<const TokenId> tokens, Polarity label) const {
    return classify_prob(*params, tokens, label);
  }
};

inline constexpr std::string_view kClassifierMagic = "MOTCLS1";

inline void save_classifier(std::ostream& os, const ClassifierParams& c) {
  const std::uint64_t dims[] = {static_cast<std::uint64_t>(c.vocab_size()),
                                static_cast<std::uint64_t>(c.embed_dim())};
  binio::write_header(os, kClassifierMagic, dims);
  binio::put_doubles(os, std::span(c.embed.data(), static_cast<std::size_t>(c.embed.size())));
  binio::put_doubles(os, std::span(c.head.data(), static_cast<std::size_t>(c.head.size())));
  binio::put_doubles(os, std::span(c.bias.data(), static_cast<std::size_t>(c.bias.size())));
}

inline ClassifierParams load_classifier(std::istream& is) {
  const auto dims = binio::read_header(is, kClassifierMagic);
  if (dims.size() != 2)
    throw std::runtime_error("classifier checkpoint: expected 2 dims");
  auto c = ClassifierParams::zeros(static_cast<Eigen::Index>(dims[0]),
                                   static_cast<Eigen::Index>(dims[1]));
  binio::get_doubles(is, std::span(c.embed.data(), static_cast<std::size_t>(c.embed.size())));
  binio::get_doubles(is, std::span(c.head.data(), static_cast<std::size_t>(c.head.size())));
  binio::get_doubles(is, std::span(c.bias.data(), static_cast<std::size_t>(c.bias.size())));
  return c;
}

}  // namespace motlab

#endif  // MOTLAB_CLASSIFIER_HPP_
