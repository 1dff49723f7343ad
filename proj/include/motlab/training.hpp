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
#ifndef MOTLAB_TRAINING_HPP_
#define MOTLAB_TRAINING_HPP_

// Training regimes for the translation policy: maximum likelihood on parallel
// data, single-sample REINFORCE, and best-of-K machine-oriented REINFORCE
// driven by a frozen downstream classifier.

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "motlab/classifier.hpp"
#include "motlab/corpus.hpp"
#include "motlab/random.hpp"
#include "motlab/seqpolicy.hpp"

namespace motlab {

struct TrainConfig {
  double lr = 0.01;
  std::size_t k = 5;
  std::size_t epochs = 10;
  std::size_t max_len = 16;
  std::uint64_t seed = 1;
  bool shuffle_per_epoch = true;
  bool baseline = false;
  double data_fraction = 1.0;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  // lr = 0 is accepted as a null step.
  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr))
      throw std::invalid_argument("train config: lr must be finite and >= 0");
    if (k < 1) throw std::invalid_argument("train config: k must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (max_len < 1) throw std::invalid_argument("train config: max_len must be >= 1");
    if (!(data_fraction > 0.0 && data_fraction <= 1.0))
      throw std::invalid_argument("train config: data_fraction must lie in (0, 1]");
    if (!(clip_norm >= 0.0))
      throw std::invalid_argument("train config: clip_norm must be >= 0");
  }
};

enum class Strategy { Reinforce, MoReinforce };

inline std::string_view to_string(Strategy s) {
  return s == Strategy::Reinforce ? "reinforce" : "mo-reinforce";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "reinforce") return Strategy::Reinforce;
  if (s == "mo-reinforce") return Strategy::MoReinforce;
  throw std::invalid_argument("unknown strategy '" + std::string(s) +
                              "' (expected reinforce or mo-reinforce)");
}

/// Per-epoch mean feedback of the candidates used for updates.
struct RewardLog {
  Strategy strategy = Strategy::MoReinforce;
  std::vector<double> mean_reward;
  std::vector<std::size_t> n_examples;

  std::size_t epochs() const { return mean_reward.size(); }
};

inline void write_reward_csv_header(std::ostream& os) {
  os << "epoch,strategy,mean_reward,n_examples\n";
}

inline void write_reward_csv_rows(std::ostream& os, const RewardLog& log) {
  char buf[64];
  for (std::size_t e = 0; e < log.epochs(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", log.mean_reward[e]);
    os << (e + 1) << ',' << to_string(log.strategy) << ',' << buf << ','
       << log.n_examples[e] << '\n';
  }
}

/// Rescales `grad` so that its norm is at most `max_norm` (0 disables).
inline void clip_gradient(PolicyParams& grad, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(squared_norm(grad));
  if (norm > max_norm) grad.axpy(max_norm / norm - 1.0, grad);
}

/// floor(fraction * N) examples: seeded shuffle, then prefix.
template <class T>
std::vector<T> select_fraction(std::span<const T> items, double fraction,
                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("select_fraction: fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(items.size())));
  if (n == 0)
    throw std::invalid_argument("select_fraction: fraction selects no examples");
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(idx), rng);
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items[idx[i]]);
  return out;
}

struct MleResult {
  PolicyParams params;
  std::vector<double> epoch_logprob;  // mean per-example log-likelihood
  std::size_t n_examples = 0;
};

/// Per-example SGD ascending log p(reference | source). The data-fraction
/// subset and the epoch orders are functions of `config.seed`.
inline MleResult train_mle(PolicyParams theta,
                           std::span<const LabeledParallelExample> parallel,
                           const TrainConfig& config) {
  config.validate();
  for (const auto& e : parallel)
    if (!e.reference)
      throw std::invalid_argument("train_mle: parallel example lacks a reference");
  const auto data = select_fraction(parallel, config.data_fraction,
                                    derive_seed(config.seed, "data-fraction"));
  Rng order_rng(derive_seed(config.seed, "mle-order"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  MleResult out;
  out.n_examples = data.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle_per_epoch) shuffle(std::span<std::size_t>(order), order_rng);
    double total = 0.0;
    for (std::size_t i : order) {
      auto lg = logprob_and_grad(theta, data[i].source, *data[i].reference);
      total += lg.logprob;
      if (config.lr == 0.0) continue;
      clip_gradient(lg.grad, config.clip_norm);
      theta.axpy(config.lr, lg.grad);
    }
    out.epoch_logprob.push_back(total / static_cast<double>(data.size()));
    spdlog::debug("train_mle: epoch {} mean logprob {:.4f}", epoch + 1,
                  out.epoch_logprob.back());
  }
  out.params = std::move(theta);
  return out;
}

/// Running mean of past feedback, used when the baseline flag is on.
struct RewardBaseline {
  double sum = 0.0;
  std::size_t count = 0;

  double value() const { return count ? sum / static_cast<double>(count) : 0.0; }
  void observe(double r) {
    sum += r;
    ++count;
  }
};

namespace detail {

inline void policy_gradient_update(PolicyParams& theta, std::span<const TokenId> x,
                                   const Candidate& c, double weight,
                                   const TrainConfig& config) {
  const double step = config.lr * weight;
  if (step == 0.0) return;
  auto lg = logprob_and_grad(theta, x, c.tokens);
  clip_gradient(lg.grad, config.clip_norm);
  theta.axpy(step, lg.grad);
}

inline double advantage(double feedback, const TrainConfig& config,
                        RewardBaseline& baseline) {
  double w = feedback;
  if (config.baseline) {
    w -= baseline.value();
    baseline.observe(feedback);
  }
  return w;
}

}  // namespace detail

/// Single-sample REINFORCE: theta += lr * (D - b) * grad log p(y | x), y ~ p.
template <RewardModel R, class G>
Candidate reinforce_step(PolicyParams& theta, std::span<const TokenId> x,
                         Polarity label, const R& reward, G& rng,
                         const TrainConfig& config, RewardBaseline& baseline) {
  Candidate c = sample_multinomial(theta, x, rng, config.max_len);
  c.feedback = reward(c.tokens, label);
  detail::policy_gradient_update(theta, x, c,
                                 detail::advantage(*c.feedback, config, baseline),
                                 config);
  return c;
}

template <RewardModel R, class G>
Candidate reinforce_step(PolicyParams& theta, std::span<const TokenId> x,
                         Polarity label, const R& reward, G& rng,
                         const TrainConfig& config) {
  RewardBaseline unused;
  return reinforce_step(theta, x, label, reward, rng, config, unused);
}

/// Index of the largest value; ties go to the earliest index.
inline std::size_t argmax_first(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_first: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

struct CandidatePool {
  std::vector<Candidate> candidates;  // in sampling order, feedback set
  std::size_t best = 0;

  const Candidate& selected() const { return candidates[best]; }
};

/// Draws K candidates, scores each with the reward model and marks the one
/// with the highest feedback (earliest on ties).
template <RewardModel R, class G>
CandidatePool sample_and_score(const PolicyParams& theta, std::span<const TokenId> x,
                               Polarity label, std::size_t k, const R& reward,
                               G& rng, std::size_t max_len) {
  if (k < 1) throw std::invalid_argument("mo_reinforce_select: K must be >= 1");
  CandidatePool pool;
  pool.candidates.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    pool.candidates.push_back(sample_multinomial(theta, x, rng, max_len));
  std::vector<double> feedback(k);
  for (std::size_t i = 0; i < k; ++i) {
    feedback[i] = reward(pool.candidates[i].tokens, label);
    pool.candidates[i].feedback = feedback[i];
  }
  pool.best = argmax_first(feedback);
  return pool;
}

/// Best-of-K candidate selection with respect to classifier feedback.
template <RewardModel R, class G>
Candidate mo_reinforce_select(const PolicyParams& theta, std::span<const TokenId> x,
                              Polarity label, std::size_t k, const R& reward, G& rng,
                              std::size_t max_len) {
  auto pool = sample_and_score(theta, x, label, k, reward, rng, max_len);
  return std::move(pool.candidates[pool.best]);
}

/// theta += lr * D(y*) * grad log p(y* | x) for the best-of-K candidate y*.
template <RewardModel R, class G>
Candidate mo_reinforce_step(PolicyParams& theta, std::span<const TokenId> x,
                            Polarity label, const R& reward, G& rng,
                            const TrainConfig& config, RewardBaseline& baseline) {
  Candidate c = mo_reinforce_select(theta, x, label, config.k, reward, rng, config.max_len);
  detail::policy_gradient_update(theta, x, c,
                                 detail::advantage(*c.feedback, config, baseline),
                                 config);
  return c;
}

template <RewardModel R, class G>
Candidate mo_reinforce_step(PolicyParams& theta, std::span<const TokenId> x,
                            Polarity label, const R& reward, G& rng,
                            const TrainConfig& config) {
  RewardBaseline unused;
  return mo_reinforce_step(theta, x, label, reward, rng, config, unused);
}

struct RlResult {
  PolicyParams params;
  RewardLog log;
};

/// Fine-tunes on labeled source sentences; one update per example per epoch.
template <RewardModel R>
RlResult run_rl(PolicyParams theta, std::span<const LabeledParallelExample> dev,
                const R& reward, const TrainConfig& config, Strategy strategy) {
  config.validate();
  if (dev.empty()) throw std::invalid_argument("run_rl: empty training set");
  Rng order_rng(derive_seed(config.seed, "rl-order"));
  Rng sample_rng(derive_seed(config.seed, "rl-sampling"));
  std::vector<std::size_t> order(dev.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  RlResult out;
  out.log.strategy = strategy;
  RewardBaseline baseline;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle_per_epoch) shuffle(std::span<std::size_t>(order), order_rng);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& ex = dev[i];
      const Candidate c =
          strategy == Strategy::Reinforce
              ? reinforce_step(theta, ex.source, ex.label, reward, sample_rng, config,
                               baseline)
              : mo_reinforce_step(theta, ex.source, ex.label, reward, sample_rng,
                                  config, baseline);
      total += *c.feedback;
    }
    out.log.mean_reward.push_back(total / static_cast<double>(dev.size()));
    out.log.n_examples.push_back(dev.size());
    spdlog::debug("run_rl[{}]: epoch {} mean reward {:.4f}", to_string(strategy),
                  epoch + 1, out.log.mean_reward.back());
  }
  out.params = std::move(theta);
  return out;
}

}  // namespace motlab

#endif  // MOTLAB_TRAINING_HPP_
