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
#ifndef MOTLAB_EVAL_HPP_
#define MOTLAB_EVAL_HPP_

// Metrics (macro-F1, smoothed corpus BLEU, mean reward), exhaustive oracles
// over small target spaces, and single-system evaluation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "motlab/classifier.hpp"
#include "motlab/corpus.hpp"
#include "motlab/seqpolicy.hpp"
#include "motlab/training.hpp"

namespace motlab {

struct ClassF1 {
  double positive = 0.0;
  double negative = 0.0;

  double macro() const { return 0.5 * (positive + negative); }
};

/// Per-class F1 = 2tp / (2tp + fp + fn). A class absent from both preds and
/// golds scores 1; absent from golds only, 0.
inline ClassF1 per_class_f1(std::span<const Polarity> preds,
                            std::span<const Polarity> golds) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("macro_f1: preds and golds differ in length");
  if (preds.empty()) throw std::invalid_argument("macro_f1: empty input");
  auto f1 = [&](Polarity c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == c;
      const bool g = golds[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    const auto denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };
  return {f1(Polarity::Positive), f1(Polarity::Negative)};
}

inline double macro_f1(std::span<const Polarity> preds,
                       std::span<const Polarity> golds) {
  return per_class_f1(preds, golds).macro();
}

/// Corpus BLEU in [0, 1]: geometric mean of clipped n-gram precisions for
/// n = 1..max_n times the brevity penalty. For n >= 2 a zero match count is
/// replaced by one (p_n = 1 / max(total_n, 1)); unigram precision is never
/// smoothed.
template <class T>
double corpus_bleu(std::span<const std::vector<T>> hypotheses,
                   std::span<const std::vector<T>> references, int max_n = 4) {
  if (hypotheses.empty()) throw std::invalid_argument("corpus_bleu: no hypotheses");
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("corpus_bleu: hypothesis/reference count mismatch");
  if (max_n < 1) throw std::invalid_argument("corpus_bleu: max_n must be >= 1");

  std::vector<std::size_t> matches(max_n, 0), totals(max_n, 0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& h = hypotheses[s];
    const auto& r = references[s];
    hyp_len += h.size();
    ref_len += r.size();
    for (int n = 1; n <= max_n; ++n) {
      const auto un = static_cast<std::size_t>(n);
      if (h.size() < un) continue;
      std::map<std::vector<T>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + un <= r.size(); ++i)
        ++ref_counts[std::vector<T>(r.begin() + i, r.begin() + i + un)];
      std::map<std::vector<T>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + un <= h.size(); ++i)
        ++hyp_counts[std::vector<T>(h.begin() + i, h.begin() + i + un)];
      for (const auto& [gram, cnt] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(cnt, it->second);
      }
      totals[n - 1] += h.size() - un + 1;
    }
  }
  if (hyp_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    double p;
    if (matches[n] == 0)
      p = 1.0 / static_cast<double>(std::max<std::size_t>(totals[n], 1));
    else
      p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    log_sum += std::log(p);
  }
  const double bp =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return std::min(1.0, bp * std::exp(log_sum / max_n));
}

// ---------------------------------------------------------------------------
// Exhaustive oracles. Y = every EOS-terminated sequence of length <= max_len
// plus every EOS-free sequence truncated at max_len.

inline constexpr double kEnumerationCap = 1e6;

inline void check_enumerable(const PolicyParams& p, std::size_t max_len) {
  const double space =
      std::pow(static_cast<double>(p.tgt_vocab()), static_cast<double>(max_len));
  if (space > kEnumerationCap)
    throw std::invalid_argument("target space too large to enumerate (" +
                                std::to_string(space) + " > 1e6 sequences)");
}

/// Calls visit(tokens, logprob) for every sequence in Y.
template <class Visit>
void enumerate_sequences(const PolicyParams& p, std::span<const TokenId> x,
                         std::size_t max_len, Visit&& visit) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  check_enumerable(p, max_len);
  const auto enc = detail::encode(p, x, false);
  Sequence prefix;
  std::function<void(const Vector&, TokenId, double)> rec =
      [&](const Vector& s, TokenId prev, double lp) {
        Vector logp(p.tgt_vocab());
        const Vector next = detail::decoder_step(p, enc.states, s, prev, logp, nullptr);
        for (Eigen::Index v = 0; v < logp.size(); ++v) {
          const auto tok = static_cast<TokenId>(v);
          prefix.push_back(tok);
          const double total = lp + logp[v];
          if (tok == special::kEos || prefix.size() == max_len)
            visit(std::span<const TokenId>(prefix), total);
          else
            rec(next, tok, total);
          prefix.pop_back();
        }
      };
  rec(detail::initial_decoder_state(enc.states), special::kBos, 0.0);
}

struct ExactExpectation {
  double expected_reward = 0.0;
  double total_mass = 0.0;
  std::size_t sequences = 0;
};

/// sum_{y in Y} p(y | x) * reward(y, label), by enumeration.
template <RewardModel R>
ExactExpectation exact_expectation(const PolicyParams& p, std::span<const TokenId> x,
                                   Polarity label, const R& reward,
                                   std::size_t max_len) {
  ExactExpectation out;
  enumerate_sequences(p, x, max_len, [&](std::span<const TokenId> y, double lp) {
    const double prob = std::exp(lp);
    out.expected_reward += prob * reward(y, label);
    out.total_mass += prob;
    ++out.sequences;
  });
  return out;
}

template <RewardModel R>
double exact_expected_reward(const PolicyParams& p, std::span<const TokenId> x,
                             Polarity label, const R& reward, std::size_t max_len) {
  return exact_expectation(p, x, label, reward, max_len).expected_reward;
}

/// Exact gradient of the expected reward: sum_y p(y) D(y) grad log p(y).
template <RewardModel R>
PolicyParams exact_expected_reward_gradient(const PolicyParams& p,
                                            std::span<const TokenId> x, Polarity label,
                                            const R& reward, std::size_t max_len) {
  PolicyParams g = p.zeros_like();
  enumerate_sequences(p, x, max_len, [&](std::span<const TokenId> y, double lp) {
    const double w = std::exp(lp) * reward(y, label);
    if (w != 0.0) g.axpy(w, grad_logprob(p, x, y));
  });
  return g;
}

// ---------------------------------------------------------------------------
// System evaluation.

enum class DecodeMode { Greedy, Beam };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::Greedy;
  std::size_t beam_width = 5;
  std::size_t max_len = 16;
};

inline Candidate translate(const PolicyParams& p, std::span<const TokenId> x,
                           const DecodeOptions& opt) {
  return opt.mode == DecodeMode::Greedy ? decode_greedy(p, x, opt.max_len)
                                        : decode_beam(p, x, opt.beam_width, opt.max_len);
}

struct SystemMetrics {
  double macro_f1 = 0.0;
  double bleu = 0.0;
  double mean_reward = 0.0;
  std::size_t distinct_outputs = 0;  // polarization diagnostic, informational
};

/// Scores given translations of `test` (one per example, specials allowed).
inline SystemMetrics evaluate_translations(std::span<const Sequence> translations,
                                           const ClassifierParams& classifier,
                                           std::span<const LabeledParallelExample> test) {
  if (translations.size() != test.size())
    throw std::invalid_argument("evaluate: one translation per test example required");
  std::vector<Polarity> preds, golds;
  std::vector<Sequence> hyps, refs;
  std::set<Sequence> distinct;
  double reward = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& ex = test[i];
    if (!ex.reference)
      throw std::invalid_argument("evaluate: test example lacks a reference");
    preds.push_back(predict(classifier, translations[i]));
    golds.push_back(ex.label);
    reward += classify_prob(classifier, translations[i], ex.label);
    hyps.push_back(strip_specials(translations[i]));
    refs.push_back(strip_specials(*ex.reference));
    distinct.insert(hyps.back());
  }
  SystemMetrics m;
  m.macro_f1 = macro_f1(preds, golds);
  m.bleu = corpus_bleu<TokenId>(hyps, refs);
  m.mean_reward = reward / static_cast<double>(test.size());
  m.distinct_outputs = distinct.size();
  return m;
}

inline std::vector<Sequence> translate_all(const PolicyParams& p,
                                           std::span<const LabeledParallelExample> test,
                                           const DecodeOptions& opt) {
  std::vector<Sequence> out;
  out.reserve(test.size());
  for (const auto& ex : test) out.push_back(translate(p, ex.source, opt).tokens);
  return out;
}

inline SystemMetrics evaluate_system(const PolicyParams& p,
                                     const ClassifierParams& classifier,
                                     std::span<const LabeledParallelExample> test,
                                     const DecodeOptions& opt) {
  return evaluate_translations(translate_all(p, test, opt), classifier, test);
}

/// Mean token accuracy of `translations` against references, position-wise
/// over the reference length.
inline double token_accuracy(std::span<const Sequence> translations,
                             std::span<const LabeledParallelExample> data) {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ref = *data[i].reference;
    for (std::size_t t = 0; t < ref.size(); ++t) {
      hit += t < translations[i].size() && translations[i][t] == ref[t];
      ++total;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace motlab

#endif  // MOTLAB_EVAL_HPP_
