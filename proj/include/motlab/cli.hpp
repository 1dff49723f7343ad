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
#ifndef MOTLAB_CLI_HPP_
#define MOTLAB_CLI_HPP_

// Command implementations behind the `motlab` executable. Every command reads
// the run configuration, works inside the output directory and writes its
// artifacts atomically (temp file + rename), so a failing command never
// clobbers earlier outputs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "motlab/classifier.hpp"
#include "motlab/config.hpp"
#include "motlab/corpus.hpp"
#include "motlab/eval.hpp"
#include "motlab/experiment.hpp"
#include "motlab/seqpolicy.hpp"
#include "motlab/svg.hpp"
#include "motlab/training.hpp"

namespace motlab::cli {

namespace fs = std::filesystem;

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::string command;
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // key, value
  std::optional<Strategy> strategy;
  std::optional<std::string> checkpoint;
  std::optional<std::string> csv_path;
};

// ---------------------------------------------------------------------------
// Files.

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw CliError("failed writing '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

inline std::ifstream open_input(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path))
    throw CliError("missing input file '" + path.string() + "'" +
                   (hint.empty() ? "" : " (" + hint + ")"));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot read '" + path.string() + "'");
  return in;
}

struct Context {
  RunConfig config;
  std::string hash;
  std::string command;
  fs::path out;

  std::uint64_t seed() const { return config.experiment.seed; }
  const ExperimentConfig& exp() const { return config.experiment; }

  std::string header() const {
    return "# motlab " + command + "\n# config_hash=" + hash +
           "\n# seed=" + std::to_string(seed()) + "\n";
  }
  void finish() const {
    write_file_atomic(out / "config.resolved",
                      "# config_hash=" + hash + "\n" + canonical_config(config));
  }
};

inline Context make_context(const Invocation& inv) {
  if (!inv.config_path) throw CliError("--config is required for '" + inv.command + "'");
  Context ctx;
  ctx.command = inv.command;
  ctx.config = load_config_file(*inv.config_path);
  for (const auto& [k, v] : inv.overrides) set_config_value(ctx.config, k, v);
  validate_config(ctx.config);
  ctx.hash = config_hash(ctx.config);
  ctx.out = ctx.config.out;
  spdlog::info("{}: config hash {} seed {} out {}", inv.command, ctx.hash, ctx.seed(),
               ctx.out.string());
  return ctx;
}

// ---------------------------------------------------------------------------
// Artifact I/O.

inline const char* kSplits[] = {"train", "dev", "test", "target_labeled"};

inline void save_corpus(const Context& ctx, const Corpus& c) {
  const auto dir = ctx.out / "corpus";
  auto vocab_text = [&](const Vocabulary& v) {
    std::ostringstream os;
    os << ctx.header();
    write_vocabulary(os, v);
    return os.str();
  };
  const std::vector<LabeledParallelExample>* splits[] = {
      &c.parallel_train, &c.labeled_dev, &c.labeled_test, &c.target_labeled};
  std::vector<std::pair<fs::path, std::string>> files{
      {dir / "source.vocab", vocab_text(c.source_vocab)},
      {dir / "target.vocab", vocab_text(c.target_vocab)}};
  for (std::size_t i = 0; i < 4; ++i) {
    std::ostringstream os;
    os << ctx.header() << "# split=" << kSplits[i] << "\n";
    write_split(os, *splits[i], c.source_vocab, c.target_vocab);
    files.emplace_back(dir / (std::string(kSplits[i]) + ".tsv"), os.str());
  }
  for (const auto& [path, text] : files) write_file_atomic(path, text);
}

inline Corpus load_corpus(const Context& ctx) {
  const auto dir = ctx.out / "corpus";
  const std::string hint = "run gen-corpus first";
  Corpus c;
  {
    auto in = open_input(dir / "source.vocab", hint);
    c.source_vocab = read_vocabulary(in);
  }
  {
    auto in = open_input(dir / "target.vocab", hint);
    c.target_vocab = read_vocabulary(in);
  }
  std::vector<LabeledParallelExample>* splits[] = {
      &c.parallel_train, &c.labeled_dev, &c.labeled_test, &c.target_labeled};
  for (std::size_t i = 0; i < 4; ++i) {
    auto in = open_input(dir / (std::string(kSplits[i]) + ".tsv"), hint);
    *splits[i] = read_split(in, c.source_vocab, c.target_vocab);
  }
  const auto& spec = ctx.exp().corpus;
  const auto expected = special::kCount + spec.filler_vocab_size + 2 * spec.polarity_lexicon_size;
  if (c.source_vocab.size() != expected || c.target_vocab.size() != expected)
    throw CliError("dimension mismatch: corpus on disk has vocabulary size " +
                   std::to_string(c.source_vocab.size()) +
                   " but corpus.filler_vocab_size / corpus.polarity_lexicon_size imply " +
                   std::to_string(expected));
  return c;
}

inline void save_policy_file(const fs::path& path, const PolicyParams& p) {
  std::ostringstream os(std::ios::binary);
  save_policy(os, p);
  write_file_atomic(path, os.str());
}

inline void save_classifier_file(const fs::path& path, const ClassifierParams& c) {
  std::ostringstream os(std::ios::binary);
  save_classifier(os, c);
  write_file_atomic(path, os.str());
}

inline PolicyParams load_policy_checked(const Context& ctx, const fs::path& path,
                                        const Corpus& c, const std::string& hint) {
  auto in = open_input(path, hint);
  PolicyParams p;
  try {
    p = load_policy(in);
  } catch (const std::runtime_error& e) {
    throw CliError("'" + path.string() + "': " + e.what());
  }
  auto mismatch = [&](const std::string& key, long long got, long long want) {
    throw CliError("dimension mismatch for key '" + key + "': checkpoint '" + path.string() +
                   "' has " + std::to_string(got) + ", config/corpus expects " +
                   std::to_string(want));
  };
  if (p.src_vocab() != static_cast<Eigen::Index>(c.source_vocab.size()))
    mismatch("corpus.filler_vocab_size", p.src_vocab(),
             static_cast<long long>(c.source_vocab.size()));
  if (p.tgt_vocab() != static_cast<Eigen::Index>(c.target_vocab.size()))
    mismatch("corpus.polarity_lexicon_size", p.tgt_vocab(),
             static_cast<long long>(c.target_vocab.size()));
  if (p.embed_dim() != ctx.exp().embed_dim) mismatch("model.d", p.embed_dim(), ctx.exp().embed_dim);
  if (p.hidden_dim() != ctx.exp().hidden_dim)
    mismatch("model.h", p.hidden_dim(), ctx.exp().hidden_dim);
  return p;
}

inline ClassifierParams load_classifier_checked(const Context& ctx, const fs::path& path,
                                                std::size_t vocab) {
  auto in = open_input(path, "run train-classifier first");
  ClassifierParams cls;
  try {
    cls = load_classifier(in);
  } catch (const std::runtime_error& e) {
    throw CliError("'" + path.string() + "': " + e.what());
  }
  if (cls.vocab_size() != static_cast<Eigen::Index>(vocab))
    throw CliError("dimension mismatch for key 'corpus.polarity_lexicon_size': classifier '" +
                   path.string() + "' covers " + std::to_string(cls.vocab_size()) +
                   " tokens, corpus has " + std::to_string(vocab));
  if (cls.embed_dim() != ctx.exp().classifier.embed_dim)
    throw CliError("dimension mismatch for key 'classifier.e': classifier '" + path.string() +
                   "' has " + std::to_string(cls.embed_dim()) + ", config has " +
                   std::to_string(ctx.exp().classifier.embed_dim));
  return cls;
}

inline std::string metrics_csv(const Context& ctx, const std::string& system,
                               const std::string& condition, const SystemMetrics& m) {
  std::ostringstream os;
  os << ctx.header() << "system,condition,metric,value\n";
  os << system << ',' << condition << ",macro_f1," << format_value(m.macro_f1) << '\n';
  os << system << ',' << condition << ",bleu," << format_value(m.bleu) << '\n';
  os << system << ',' << condition << ",mean_reward," << format_value(m.mean_reward) << '\n';
  os << system << ',' << condition << ",distinct_outputs," << m.distinct_outputs << '\n';
  return os.str();
}

inline std::string reward_csv(const Context& ctx, std::initializer_list<const RewardLog*> logs) {
  std::ostringstream os;
  os << ctx.header();
  write_reward_csv_header(os);
  for (const auto* log : logs) write_reward_csv_rows(os, *log);
  return os.str();
}

// ---------------------------------------------------------------------------
// Plotting from CSV.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (t.header.empty())
      t.header = split(line);
    else
      t.rows.push_back(split(line));
  }
  return t;
}

/// Reward-log CSVs become reward curves, ablation CSVs ablation curves.
inline PlotSpec plot_from_csv(const CsvTable& t, const std::string& title) {
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) return i;
    throw CliError("plot: CSV lacks column '" + name + "'");
  };
  PlotSpec spec;
  spec.title = title;
  std::size_t xcol, ycol, scol;
  if (t.header == std::vector<std::string>{"epoch", "strategy", "mean_reward", "n_examples"}) {
    xcol = column("epoch"), ycol = column("mean_reward"), scol = column("strategy");
    spec.x_label = "epoch";
    spec.y_label = "mean reward";
  } else if (t.header == std::vector<std::string>{"strategy", "dev_fraction", "macro_f1"}) {
    xcol = column("dev_fraction"), ycol = column("macro_f1"), scol = column("strategy");
    spec.x_label = "fraction of dev set";
    spec.y_label = "macro F1";
  } else {
    throw CliError("plot: unrecognized CSV header (expected a reward log or ablation table)");
  }
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw CliError("plot: ragged CSV row");
    auto it = std::find_if(spec.series.begin(), spec.series.end(),
                           [&](const PlotSeries& s) { return s.name == row[scol]; });
    if (it == spec.series.end()) {
      spec.series.push_back({row[scol], {}, {}});
      it = spec.series.end() - 1;
    }
    it->x.push_back(detail::parse_double("plot", row[xcol]));
    it->y.push_back(detail::parse_double("plot", row[ycol]));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Commands.

inline void cmd_gen_corpus(const Context& ctx) {
  const auto c = stage::corpus(ctx.exp(), ctx.seed());
  save_corpus(ctx, c);
  spdlog::info("gen-corpus: {} train / {} dev / {} test / {} target-labeled examples",
               c.parallel_train.size(), c.labeled_dev.size(), c.labeled_test.size(),
               c.target_labeled.size());
}

inline void cmd_train_classifier(const Context& ctx) {
  const auto c = load_corpus(ctx);
  const auto cls = stage::target_classifier(ctx.exp(), c, ctx.seed());
  const auto src = stage::source_classifier(ctx.exp(), c, ctx.seed());
  const auto gold = evaluate_target_gold(cls, c.labeled_test);
  const auto orig = evaluate_original(src, c.labeled_test);
  save_classifier_file(ctx.out / "classifier.bin", cls);
  save_classifier_file(ctx.out / "source_classifier.bin", src);
  std::ostringstream os;
  os << ctx.header() << "system,condition,metric,value\n"
     << "TargetGold,reference,macro_f1," << format_value(gold.macro_f1) << '\n'
     << "Original,source,macro_f1," << format_value(orig.macro_f1) << '\n';
  write_file_atomic(ctx.out / "classifier_metrics.csv", os.str());
  spdlog::info("train-classifier: TargetGold F1 {:.4f}, Original F1 {:.4f}", gold.macro_f1,
               orig.macro_f1);
}

inline void cmd_train_generic(const Context& ctx) {
  const auto c = load_corpus(ctx);
  const auto r = stage::generic(ctx.exp(), c, ctx.exp().mle.data_fraction, ctx.seed());
  std::ostringstream os;
  os << ctx.header() << "# data_fraction=" << format_value(ctx.exp().mle.data_fraction)
     << " n_examples=" << r.n_examples << "\nepoch,mean_logprob\n";
  for (std::size_t e = 0; e < r.epoch_logprob.size(); ++e)
    os << e + 1 << ',' << format_value(r.epoch_logprob[e]) << '\n';
  save_policy_file(ctx.out / "generic.bin", r.params);
  write_file_atomic(ctx.out / "mle_log.csv", os.str());
  spdlog::info("train-generic: {} examples, final mean logprob {:.4f}", r.n_examples,
               r.epoch_logprob.back());
}

inline void cmd_finetune(const Context& ctx, Strategy strategy,
                         const std::optional<std::string>& checkpoint) {
  const auto c = load_corpus(ctx);
  const auto cls =
      load_classifier_checked(ctx, ctx.out / "classifier.bin", c.target_vocab.size());
  const fs::path start = checkpoint ? fs::path(*checkpoint) : ctx.out / "generic.bin";
  const auto theta = load_policy_checked(ctx, start, c, "run train-generic first");
  const auto data = stage::rl_data(c, ctx.seed(), 0, 1.0);
  const auto r = stage::finetune(ctx.exp(), theta, data, cls, strategy, ctx.seed());
  const std::string name(to_string(strategy));
  save_policy_file(ctx.out / (name + ".bin"), r.params);
  write_file_atomic(ctx.out / ("rewards_" + name + ".csv"), reward_csv(ctx, {&r.log}));
  spdlog::info("finetune[{}]: reward {:.4f} -> {:.4f} over {} epochs", name,
               r.log.mean_reward.front(), r.log.mean_reward.back(), r.log.epochs());
}

inline SystemMetrics cmd_evaluate(const Context& ctx, const std::optional<std::string>& checkpoint) {
  if (!checkpoint) throw CliError("evaluate requires --checkpoint");
  const auto c = load_corpus(ctx);
  const auto cls =
      load_classifier_checked(ctx, ctx.out / "classifier.bin", c.target_vocab.size());
  const auto p = load_policy_checked(ctx, *checkpoint, c, "");
  const auto m = evaluate_system(p, cls, c.labeled_test, ctx.exp().decode);
  const auto stem = fs::path(*checkpoint).stem().string();
  write_file_atomic(ctx.out / ("metrics_" + stem + ".csv"), metrics_csv(ctx, stem, "test", m));
  std::cout << "macro_f1=" << format_value(m.macro_f1) << " bleu=" << format_value(m.bleu)
            << " mean_reward=" << format_value(m.mean_reward)
            << " distinct_outputs=" << m.distinct_outputs << '\n';
  return m;
}

inline std::string fraction_tag(double f) { return "data" + format_value(f); }

inline void cmd_experiment(const Context& ctx) {
  const auto& cfg = ctx.exp();
  const auto rep = run_experiment(cfg);

  std::vector<std::pair<fs::path, std::string>> files;
  {
    std::ostringstream os;
    os << ctx.header() << "# replicate_seeds=";
    for (std::size_t r = 0; r < rep.replicates.size(); ++r)
      os << (r ? "," : "") << rep.replicates[r].seed;
    os << '\n';
    write_report_csv(os, rep);
    files.emplace_back(ctx.out / "report.csv", os.str());
  }
  const auto& first = rep.replicates.front();
  for (std::size_t ci = 0; ci < first.conditions.size(); ++ci) {
    const auto tag = fraction_tag(first.conditions[ci].data_fraction);
    const auto re = mean_curve(rep, ci, Strategy::Reinforce);
    const auto mo = mean_curve(rep, ci, Strategy::MoReinforce);
    const auto text = reward_csv(ctx, {&re, &mo});
    files.emplace_back(ctx.out / ("rewards_" + tag + ".csv"), text);
    std::istringstream is(text);
    files.emplace_back(ctx.out / ("rewards_" + tag + ".svg"),
                       render_svg(plot_from_csv(read_csv(is), "Average reward per epoch (" +
                                                                  tag + ", mean over seeds)")));
    for (const auto& r : rep.replicates) {
      const auto& cond = r.conditions[ci];
      files.emplace_back(
          ctx.out / ("rewards_" + tag + "_seed" + std::to_string(r.seed) + ".csv"),
          reward_csv(ctx, {&cond.reinforce_log, &cond.mo_reinforce_log}));
    }
  }
  if (!first.ablation.empty()) {
    std::ostringstream os;
    os << ctx.header();
    write_ablation_csv(os, rep);
    files.emplace_back(ctx.out / "ablation.csv", os.str());
    std::istringstream is(os.str());
    files.emplace_back(ctx.out / "ablation.svg",
                       render_svg(plot_from_csv(read_csv(is),
                                                "Test F1 vs dev-set fraction (mean over "
                                                "shuffles and seeds)")));
  }
  for (const auto& [path, text] : files) write_file_atomic(path, text);
  spdlog::info("experiment: wrote {} files to {}", files.size(), ctx.out.string());
}

inline void cmd_plot(const std::string& csv_path) {
  auto in = open_input(csv_path, "");
  const auto table = read_csv(in);
  fs::path svg = csv_path;
  svg.replace_extension(".svg");
  write_file_atomic(svg, render_svg(plot_from_csv(table, fs::path(csv_path).stem().string())));
  spdlog::info("plot: wrote {}", svg.string());
}

/// Runs one command; exceptions propagate to the caller.
inline void run(const Invocation& inv) {
  if (inv.command == "plot") {
    if (!inv.csv_path) throw CliError("plot requires a CSV path");
    cmd_plot(*inv.csv_path);
    return;
  }
  const auto ctx = make_context(inv);
  if (inv.command == "gen-corpus") {
    cmd_gen_corpus(ctx);
  } else if (inv.command == "train-classifier") {
    cmd_train_classifier(ctx);
  } else if (inv.command == "train-generic") {
    cmd_train_generic(ctx);
  } else if (inv.command == "finetune") {
    cmd_finetune(ctx, inv.strategy.value_or(Strategy::MoReinforce), inv.checkpoint);
  } else if (inv.command == "evaluate") {
    cmd_evaluate(ctx, inv.checkpoint);
  } else if (inv.command == "experiment") {
    cmd_experiment(ctx);
  } else {
    throw CliError("unknown command '" + inv.command + "'");
  }
  ctx.finish();
}

}  // namespace motlab::cli

#endif  // MOTLAB_CLI_HPP_
