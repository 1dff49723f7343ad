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
// motlab: corpus generation, training, fine-tuning, evaluation and plotting.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "motlab/cli.hpp"

namespace {

std::string fraction_text(double f) { return motlab::detail::shortest(f); }

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("motlab"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"motlab: machine-oriented translation experiments on a synthetic task"};
  app.require_subcommand(1);

  motlab::cli::Invocation inv;
  std::string config, out, strategy, decode, checkpoint, csv;
  std::uint64_t seed = 0;
  std::size_t k = 0, beam_width = 0;
  double data_fraction = 0;
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "run configuration file")->required();
    cmd->add_option("--seed", seed, "override the global seed");
    cmd->add_option("--out", out, "override the output directory");
    cmd->add_option("--k", k, "candidates per step for mo-reinforce");
    cmd->add_option("--data-fraction", data_fraction, "fraction of parallel data for MLE");
    cmd->add_option("--decode", decode, "test-time decoding")
        ->check(CLI::IsMember({"greedy", "beam"}));
    cmd->add_option("--beam-width", beam_width, "beam width when --decode beam");
  };
  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  auto* tcls = app.add_subcommand("train-classifier", "train target and source classifiers");
  auto* tgen = app.add_subcommand("train-generic", "MLE training of the Generic system");
  auto* fine = app.add_subcommand("finetune", "RL fine-tuning on the labeled dev set");
  auto* eval = app.add_subcommand("evaluate", "score a policy checkpoint on the test set");
  auto* expt = app.add_subcommand("experiment", "run the full comparison and ablation");
  auto* plot = app.add_subcommand("plot", "render a reward or ablation CSV as SVG");
  for (auto* cmd : {gen, tcls, tgen, fine, eval, expt}) common(cmd);
  fine->add_option("--strategy", strategy, "reinforce|mo-reinforce")
      ->check(CLI::IsMember({"reinforce", "mo-reinforce"}));
  fine->add_option("--checkpoint", checkpoint, "starting policy (default: generic.bin)");
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint to evaluate")->required();
  plot->add_option("csv", csv, "CSV written by finetune or experiment")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  auto* used = app.get_subcommands().front();
  inv.command = used->get_name();
  if (!config.empty()) inv.config_path = config;
  auto given = [&](const char* flag) {
    const auto* opt = used->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) inv.overrides.emplace_back("seed", std::to_string(seed));
  if (given("--out")) inv.overrides.emplace_back("out", out);
  if (given("--k")) inv.overrides.emplace_back("train.rl.k", std::to_string(k));
  if (given("--data-fraction"))
    inv.overrides.emplace_back("train.mle.data_fraction", fraction_text(data_fraction));
  if (given("--decode")) inv.overrides.emplace_back("eval.decode", decode);
  if (given("--beam-width"))
    inv.overrides.emplace_back("eval.beam_width", std::to_string(beam_width));
  if (inv.command == "finetune" && !strategy.empty())
    inv.strategy = motlab::parse_strategy(strategy);
  if (!checkpoint.empty()) inv.checkpoint = checkpoint;
  if (!csv.empty()) inv.csv_path = csv;

  try {
    motlab::cli::run(inv);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
