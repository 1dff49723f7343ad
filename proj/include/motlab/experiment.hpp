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
#ifndef MOTLAB_EXPERIMENT_HPP_
#define MOTLAB_EXPERIMENT_HPP_

// The comparison protocol: per-seed replicates of corpus, classifiers,
// Generic MLE at each data condition, RL fine-tuning with both strategies,
// the two baselines and the dev-size ablation, plus report serialization.

#include <charconv>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "motlab/classifier.hpp"
#include "motlab/corpus.hpp"
#include "motlab/eval.hpp"
#include "motlab/random.hpp"
#include "motlab/seqpolicy.hpp"
#include "motlab/training.hpp"

namespace motlab {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  CorpusSpec corpus;  // corpus.seed is replaced by a per-replicate stage seed
  Eigen::Index embed_dim = 32;
  Eigen::Index hidden_dim = 64;
  ClassifierOptions classifier;
  TrainConfig mle;
  TrainConfig rl;
  DecodeOptions decode;
  std::size_t replicates = 3;  // replicate r runs with seed + r
  std::vector<double> conditions{0.05, 1.0};
  std::vector<double> ablation_fractions{0.25, 0.5, 0.75, 1.0};
  std::size_t ablation_shuffles = 3;

  std::uint64_t replicate_seed(std::size_t r) const { return seed + r; }
};

// ---------------------------------------------------------------------------
// Stages. Each takes the replicate seed and derives its own stream, so the
// CLI commands and the full experiment produce identical artifacts.
namespace stage {

inline Corpus corpus(const ExperimentConfig& cfg, std::uint64_t seed) {
  CorpusSpec spec = cfg.corpus;
  spec.seed = derive_seed(seed, "corpus");
  return generate_corpus(spec);
}

inline ClassifierParams target_classifier(const ExperimentConfig& cfg,
                                          const Corpus& c, std::uint64_t seed) {
  auto opt = cfg.classifier;
  opt.seed = derive_seed(seed, "classifier");
  return train_classifier(target_side(c.target_labeled), c.target_vocab.size(), opt)
      .params;
}

inline ClassifierParams source_classifier(const ExperimentConfig& cfg, const Corpus& c,
                                          std::uint64_t seed) {
  auto opt = cfg.classifier;
  opt.seed = derive_seed(seed, "source-classifier");
  const auto dev = oversample_minority(c.labeled_dev);
  return train_classifier(source_side(dev), c.source_vocab.size(), opt).params;
}

inline PolicyParams initial_policy(const ExperimentConfig& cfg, const Corpus& c,
                                   std::uint64_t seed) {
  return init_params(c.source_vocab.size(), c.target_vocab.size(), cfg.embed_dim,
                     cfg.hidden_dim, derive_seed(seed, "policy-init"));
}

inline MleResult generic(const ExperimentConfig& cfg, const Corpus& c,
                         double data_fraction, std::uint64_t seed) {
  auto mle = cfg.mle;
  mle.seed = derive_seed(seed, "mle");
  mle.data_fraction = data_fraction;
  return train_mle(initial_policy(cfg, c, seed), c.parallel_train, mle);
}

/// The oversampled dev set, permuted by shuffle `shuffle`, cut to a prefix of
/// floor(fraction * N) examples. Each class must keep at least two examples.
inline std::vector<LabeledParallelExample> rl_data(const Corpus& c, std::uint64_t seed,
                                                   std::size_t shuffle,
                                                   double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("dev fraction must lie in (0, 1]");
  const auto dev = oversample_minority(c.labeled_dev);
  std::vector<std::size_t> idx(dev.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "rl-data", shuffle));
  motlab::shuffle(std::span<std::size_t>(idx), rng);
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(dev.size())));
  std::vector<LabeledParallelExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(dev[idx[i]]);
  const auto pos = count_label(out, Polarity::Positive);
  const auto neg = count_label(out, Polarity::Negative);
  if (pos < 2 || neg < 2)
    throw std::invalid_argument("dev fraction " + std::to_string(fraction) +
                                " leaves fewer than 2 examples of a class (" +
                                std::to_string(pos) + " positive, " +
                                std::to_string(neg) + " negative)");
  return out;
}

inline RlResult finetune(const ExperimentConfig& cfg, const PolicyParams& theta,
                         std::span<const LabeledParallelExample> data,
                         const ClassifierParams& classifier, Strategy strategy,
                         std::uint64_t seed) {
  auto rl = cfg.rl;
  rl.seed = derive_seed(seed, "rl");
  return run_rl(theta, data, ClassifierReward{&classifier}, rl, strategy);
}

}  // namespace stage

/// Original baseline: source classifier applied to untranslated test sources.
inline SystemMetrics evaluate_original(const ClassifierParams& source_classifier,
                                       std::span<const LabeledParallelExample> test) {
  std::vector<Polarity> preds, golds;
  double reward = 0.0;
  for (const auto& ex : test) {
    preds.push_back(predict(source_classifier, ex.source));
    golds.push_back(ex.label);
    reward += classify_prob(source_classifier, ex.source, ex.label);
  }
  SystemMetrics m;
  m.macro_f1 = macro_f1(preds, golds);
  m.bleu = std::numeric_limits<double>::quiet_NaN();
  m.mean_reward = reward / static_cast<double>(test.size());
  m.distinct_outputs = 0;
  return m;
}

inline SystemMetrics evaluate_target_gold(const ClassifierParams& target_classifier,
                                          std::span<const LabeledParallelExample> test) {
  std::vector<Sequence> refs;
  for (const auto& ex : test) refs.push_back(*ex.reference);
  return evaluate_translations(refs, target_classifier, test);
}

struct ConditionResult {
  double data_fraction = 1.0;
  SystemMetrics generic, reinforce, mo_reinforce;
  RewardLog reinforce_log, mo_reinforce_log;
};

struct AblationPoint {
  double dev_fraction = 1.0;
  Strategy strategy = Strategy::MoReinforce;
  std::vector<double> f1_per_shuffle;

  double mean_f1() const {
    return std::accumulate(f1_per_shuffle.begin(), f1_per_shuffle.end(), 0.0) /
           static_cast<double>(f1_per_shuffle.size());
  }
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  SystemMetrics target_gold, original;
  std::vector<ConditionResult> conditions;
  std::vector<AblationPoint> ablation;  // fraction-major, Reinforce before MO
};

/// Dev-size ablation on top of a trained Generic policy: for each fraction and
/// strategy, RL on `shuffles` seeded prefixes of the oversampled dev set; the
/// test F1 of each run is recorded.
inline std::vector<AblationPoint> ablate_devsize(
    const ExperimentConfig& cfg, const Corpus& c, const PolicyParams& generic,
    const ClassifierParams& classifier, std::uint64_t seed,
    std::span<const double> fractions, std::size_t shuffles) {
  if (shuffles < 1) throw std::invalid_argument("ablation needs at least one shuffle");
  for (double f : fractions)
    for (std::size_t s = 0; s < shuffles; ++s) stage::rl_data(c, seed, s, f);

  std::vector<AblationPoint> out;
  for (double f : fractions) {
    for (Strategy strategy : {Strategy::Reinforce, Strategy::MoReinforce}) {
      AblationPoint pt{f, strategy, {}};
      for (std::size_t s = 0; s < shuffles; ++s) {
        const auto data = stage::rl_data(c, seed, s, f);
        const auto r = stage::finetune(cfg, generic, data, classifier, strategy, seed);
        pt.f1_per_shuffle.push_back(
            evaluate_system(r.params, classifier, c.labeled_test, cfg.decode).macro_f1);
      }
      spdlog::info("  ablation dev={} {}: mean F1 {:.4f}", f, to_string(strategy),
                   pt.mean_f1());
      out.push_back(std::move(pt));
    }
  }
  return out;
}

inline ReplicateResult run_replicate(const ExperimentConfig& cfg, std::uint64_t seed) {
  ReplicateResult out;
  out.seed = seed;
  const auto c = stage::corpus(cfg, seed);
  const auto cls = stage::target_classifier(cfg, c, seed);
  const auto src_cls = stage::source_classifier(cfg, c, seed);
  out.target_gold = evaluate_target_gold(cls, c.labeled_test);
  out.original = evaluate_original(src_cls, c.labeled_test);
  spdlog::info("seed {}: TargetGold F1 {:.4f}, Original F1 {:.4f}", seed,
               out.target_gold.macro_f1, out.original.macro_f1);

  const auto dev = stage::rl_data(c, seed, 0, 1.0);
  PolicyParams full_generic;
  bool have_full = false;
  for (double fraction : cfg.conditions) {
    ConditionResult cr;
    cr.data_fraction = fraction;
    const auto g = stage::generic(cfg, c, fraction, seed).params;
    cr.generic = evaluate_system(g, cls, c.labeled_test, cfg.decode);
    auto r = stage::finetune(cfg, g, dev, cls, Strategy::Reinforce, seed);
    cr.reinforce = evaluate_system(r.params, cls, c.labeled_test, cfg.decode);
    cr.reinforce_log = std::move(r.log);
    auto m = stage::finetune(cfg, g, dev, cls, Strategy::MoReinforce, seed);
    cr.mo_reinforce = evaluate_system(m.params, cls, c.labeled_test, cfg.decode);
    cr.mo_reinforce_log = std::move(m.log);
    spdlog::info("seed {} data={}: F1 Generic {:.4f} Reinforce {:.4f} MO {:.4f}; "
                 "BLEU Generic {:.4f} MO {:.4f}",
                 seed, fraction, cr.generic.macro_f1, cr.reinforce.macro_f1,
                 cr.mo_reinforce.macro_f1, cr.generic.bleu, cr.mo_reinforce.bleu);
    if (fraction == 1.0) full_generic = g, have_full = true;
    out.conditions.push_back(std::move(cr));
  }
  if (!cfg.ablation_fractions.empty()) {
    if (!have_full)
      throw std::invalid_argument("ablation requires the 1.0 data condition");
    out.ablation = ablate_devsize(cfg, c, full_generic, cls, seed,
                                  cfg.ablation_fractions, cfg.ablation_shuffles);
  }
  return out;
}

struct ExperimentReport {
  std::vector<ReplicateResult> replicates;
};

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw std::invalid_argument("experiment.replicates must be >= 1");
  ExperimentReport rep;
  for (std::size_t r = 0; r < cfg.replicates; ++r)
    rep.replicates.push_back(run_replicate(cfg, cfg.replicate_seed(r)));
  return rep;
}

// ---------------------------------------------------------------------------
// Aggregation and CSV output.

// Shortest text that reads back to the same double.
inline std::string format_value(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string condition_label(double fraction) {
  return "data=" + format_value(fraction);
}

inline std::string dev_label(double fraction) { return "dev=" + format_value(fraction); }

template <class F>
double mean_over(const std::vector<ReplicateResult>& reps, F&& f) {
  double acc = 0.0;
  for (const auto& r : reps) acc += f(r);
  return acc / static_cast<double>(reps.size());
}

/// Mean reward curve over replicates for one condition and strategy.
inline RewardLog mean_curve(const ExperimentReport& rep, std::size_t condition,
                            Strategy s) {
  RewardLog out;
  out.strategy = s;
  for (const auto& r : rep.replicates) {
    const auto& c = r.conditions.at(condition);
    const auto& log = s == Strategy::Reinforce ? c.reinforce_log : c.mo_reinforce_log;
    if (out.mean_reward.empty()) {
      out.mean_reward.assign(log.epochs(), 0.0);
      out.n_examples = log.n_examples;
    }
    for (std::size_t e = 0; e < log.epochs(); ++e)
      out.mean_reward[e] += log.mean_reward[e] / static_cast<double>(rep.replicates.size());
  }
  return out;
}

inline void write_report_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "system,condition,metric,value\n";
  const auto& reps = rep.replicates;
  auto rows = [&](const std::string& system, const std::string& cond, auto get,
                  bool with_bleu) {
    struct M {
      const char* name;
      double (*f)(const SystemMetrics&);
    };
    const M metrics[] = {
        {"macro_f1", [](const SystemMetrics& m) { return m.macro_f1; }},
        {"bleu", [](const SystemMetrics& m) { return m.bleu; }},
        {"mean_reward", [](const SystemMetrics& m) { return m.mean_reward; }},
        {"distinct_outputs",
         [](const SystemMetrics& m) { return static_cast<double>(m.distinct_outputs); }},
    };
    for (const auto& metric : metrics) {
      if (!with_bleu && (std::string_view(metric.name) == "bleu" ||
                         std::string_view(metric.name) == "distinct_outputs"))
        continue;
      os << system << ',' << cond << ',' << metric.name << ','
         << format_value(mean_over(reps, [&](const ReplicateResult& r) {
              return metric.f(get(r));
            }))
         << '\n';
      for (const auto& r : reps)
        os << system << ',' << cond << ',' << metric.name << "[seed=" << r.seed << "],"
           << format_value(metric.f(get(r))) << '\n';
    }
  };
  rows("TargetGold", "reference", [](const ReplicateResult& r) -> const SystemMetrics& {
    return r.target_gold;
  }, true);
  rows("Original", "source", [](const ReplicateResult& r) -> const SystemMetrics& {
    return r.original;
  }, false);
  if (reps.empty()) return;
  for (std::size_t ci = 0; ci < reps.front().conditions.size(); ++ci) {
    const auto cond = condition_label(reps.front().conditions[ci].data_fraction);
    rows("Generic", cond, [ci](const ReplicateResult& r) -> const SystemMetrics& {
      return r.conditions[ci].generic;
    }, true);
    rows("Reinforce", cond, [ci](const ReplicateResult& r) -> const SystemMetrics& {
      return r.conditions[ci].reinforce;
    }, true);
    rows("MO-Reinforce", cond, [ci](const ReplicateResult& r) -> const SystemMetrics& {
      return r.conditions[ci].mo_reinforce;
    }, true);
  }
  for (std::size_t ai = 0; ai < reps.front().ablation.size(); ++ai) {
    const auto& pt0 = reps.front().ablation[ai];
    const std::string system = pt0.strategy == Strategy::Reinforce ? "Reinforce" : "MO-Reinforce";
    const auto cond = dev_label(pt0.dev_fraction);
    os << system << ',' << cond << ",macro_f1,"
       << format_value(mean_over(reps, [&](const ReplicateResult& r) {
            return r.ablation[ai].mean_f1();
          }))
       << '\n';
    for (const auto& r : reps) {
      os << system << ',' << cond << ",macro_f1[seed=" << r.seed << "],"
         << format_value(r.ablation[ai].mean_f1()) << '\n';
      for (std::size_t s = 0; s < r.ablation[ai].f1_per_shuffle.size(); ++s)
        os << system << ',' << cond << ",macro_f1[seed=" << r.seed << ";shuffle=" << s
           << "]," << format_value(r.ablation[ai].f1_per_shuffle[s]) << '\n';
    }
  }
}

/// Ablation curve table: one row per (strategy, dev fraction), mean over
/// replicates of the per-replicate shuffle means.
inline void write_ablation_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "strategy,dev_fraction,macro_f1\n";
  if (rep.replicates.empty()) return;
  const auto& first = rep.replicates.front().ablation;
  for (Strategy s : {Strategy::Reinforce, Strategy::MoReinforce})
    for (std::size_t ai = 0; ai < first.size(); ++ai) {
      if (first[ai].strategy != s) continue;
      os << to_string(s) << ',' << format_value(first[ai].dev_fraction) << ','
         << format_value(mean_over(rep.replicates, [&](const ReplicateResult& r) {
              return r.ablation[ai].mean_f1();
            }))
         << '\n';
    }
}

}  // namespace motlab

#endif  // MOTLAB_EXPERIMENT_HPP_
