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
#ifndef MOTLAB_CONFIG_HPP_
#define MOTLAB_CONFIG_HPP_

// Run configuration: a flat `key = value` file with dotted keys. Blank lines
// and lines starting with '#' are ignored. Command-line flags are applied as
// further `key = value` overrides, so they go through the same validation.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "motlab/experiment.hpp"
#include "motlab/random.hpp"

namespace motlab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string out = "runs/default";
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

inline std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + shortest(v[i]);
  return out;
}

struct Binding {
  std::function<void(const std::string&, const std::string&)> set;
  std::function<std::string()> get;
};

template <class T>
Binding uint_binding(T& field) {
  return {[&field](const std::string& k, const std::string& v) {
            field = static_cast<T>(parse_uint(k, v));
          },
          [&field] { return std::to_string(field); }};
}

inline Binding double_binding(double& field) {
  return {[&field](const std::string& k, const std::string& v) { field = parse_double(k, v); },
          [&field] { return shortest(field); }};
}

inline Binding bool_binding(bool& field) {
  return {[&field](const std::string& k, const std::string& v) { field = parse_bool(k, v); },
          [&field] { return std::string(field ? "true" : "false"); }};
}

inline Binding list_binding(std::vector<double>& field) {
  return {[&field](const std::string& k, const std::string& v) { field = parse_list(k, v); },
          [&field] { return list_text(field); }};
}

inline std::map<std::string, Binding> bindings(RunConfig& rc) {
  auto& e = rc.experiment;
  std::map<std::string, Binding> b;
  b["seed"] = uint_binding(e.seed);
  b["out"] = {[&rc](const std::string& k, const std::string& v) {
                if (v.empty()) throw ConfigError(k, "must not be empty");
                rc.out = v;
              },
              [&rc] { return rc.out; }};

  b["corpus.filler_vocab_size"] = uint_binding(e.corpus.filler_vocab_size);
  b["corpus.polarity_lexicon_size"] = uint_binding(e.corpus.polarity_lexicon_size);
  b["corpus.min_len"] = uint_binding(e.corpus.min_len);
  b["corpus.max_len"] = uint_binding(e.corpus.max_len);
  b["corpus.train"] = uint_binding(e.corpus.sizes.train);
  b["corpus.dev"] = uint_binding(e.corpus.sizes.dev);
  b["corpus.test"] = uint_binding(e.corpus.sizes.test);
  b["corpus.target_labeled"] = uint_binding(e.corpus.sizes.target_labeled);
  b["corpus.negative_fraction"] = double_binding(e.corpus.negative_fraction);
  b["corpus.train_lexicon_coverage"] = double_binding(e.corpus.train_lexicon_coverage);

  b["model.d"] = uint_binding(e.embed_dim);
  b["model.h"] = uint_binding(e.hidden_dim);
  b["model.max_len"] = {[&e](const std::string& k, const std::string& v) {
                          const auto n = static_cast<std::size_t>(parse_uint(k, v));
                          e.mle.max_len = e.rl.max_len = e.decode.max_len = n;
                        },
                        [&e] { return std::to_string(e.decode.max_len); }};

  b["classifier.e"] = uint_binding(e.classifier.embed_dim);
  b["classifier.epochs"] = uint_binding(e.classifier.epochs);
  b["classifier.lr"] = double_binding(e.classifier.lr);
  b["classifier.init_scale"] = double_binding(e.classifier.init_scale);

  b["train.mle.lr"] = double_binding(e.mle.lr);
  b["train.mle.epochs"] = uint_binding(e.mle.epochs);
  b["train.mle.clip_norm"] = double_binding(e.mle.clip_norm);
  b["train.mle.shuffle"] = bool_binding(e.mle.shuffle_per_epoch);
  b["train.mle.data_fraction"] = double_binding(e.mle.data_fraction);

  b["train.rl.lr"] = double_binding(e.rl.lr);
  b["train.rl.k"] = uint_binding(e.rl.k);
  b["train.rl.epochs"] = uint_binding(e.rl.epochs);
  b["train.rl.clip_norm"] = double_binding(e.rl.clip_norm);
  b["train.rl.shuffle"] = bool_binding(e.rl.shuffle_per_epoch);
  b["train.rl.baseline"] = bool_binding(e.rl.baseline);

  b["eval.decode"] = {[&e](const std::string& k, const std::string& v) {
                        if (v == "greedy") e.decode.mode = DecodeMode::Greedy;
                        else if (v == "beam") e.decode.mode = DecodeMode::Beam;
                        else throw ConfigError(k, "expected greedy or beam, got '" + v + "'");
                      },
                      [&e] {
                        return std::string(e.decode.mode == DecodeMode::Greedy ? "greedy"
                                                                               : "beam");
                      }};
  b["eval.beam_width"] = uint_binding(e.decode.beam_width);

  b["experiment.replicates"] = uint_binding(e.replicates);
  b["experiment.conditions"] = list_binding(e.conditions);
  b["experiment.ablation_fractions"] = list_binding(e.ablation_fractions);
  b["experiment.ablation_shuffles"] = uint_binding(e.ablation_shuffles);
  return b;
}

}  // namespace detail

/// Sets one key; unknown keys and malformed values raise ConfigError.
inline void set_config_value(RunConfig& rc, const std::string& key,
                             const std::string& value) {
  auto b = detail::bindings(rc);
  auto it = b.find(key);
  if (it == b.end()) throw ConfigError(key, "unknown key");
  it->second.set(key, value);
}

/// Checks cross-field constraints, naming the offending key.
inline void validate_config(const RunConfig& rc) {
  const auto& e = rc.experiment;
  auto wrap = [](const std::string& prefix, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(prefix, ex.what());
    }
  };
  wrap("corpus", [&] { e.corpus.validate(); });
  wrap("train.mle", [&] { e.mle.validate(); });
  wrap("train.rl", [&] { e.rl.validate(); });
  if (e.embed_dim < 1) throw ConfigError("model.d", "must be >= 1");
  if (e.hidden_dim < 1) throw ConfigError("model.h", "must be >= 1");
  if (e.decode.max_len < 1) throw ConfigError("model.max_len", "must be >= 1");
  if (e.decode.beam_width < 1) throw ConfigError("eval.beam_width", "must be >= 1");
  if (e.classifier.embed_dim < 1) throw ConfigError("classifier.e", "must be >= 1");
  if (!(e.classifier.lr >= 0.0)) throw ConfigError("classifier.lr", "must be >= 0");
  if (e.replicates < 1) throw ConfigError("experiment.replicates", "must be >= 1");
  for (double f : e.conditions)
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("experiment.conditions", "fractions must lie in (0, 1]");
  for (double f : e.ablation_fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("experiment.ablation_fractions", "fractions must lie in (0, 1]");
  if (e.ablation_shuffles < 1)
    throw ConfigError("experiment.ablation_shuffles", "must be >= 1");
}

/// Applies `key = value` lines from `is` on top of `rc`.
inline void apply_config_text(RunConfig& rc, std::istream& is,
                              const std::string& source = "config") {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(is, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(text, source + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const auto key = detail::trim(std::string_view(text).substr(0, eq));
    const auto value = detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty())
      throw ConfigError(text, source + ":" + std::to_string(lineno) + ": empty key");
    if (auto [it, fresh] = seen.emplace(key, lineno); !fresh)
      throw ConfigError(key, source + ":" + std::to_string(lineno) +
                                 ": duplicate of line " + std::to_string(it->second));
    set_config_value(rc, key, value);
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  RunConfig rc;
  apply_config_text(rc, in, path);
  return rc;
}

/// Every key with its resolved value, sorted by key.
inline std::string canonical_config(const RunConfig& rc) {
  auto copy = rc;
  std::string out;
  for (const auto& [key, b] : detail::bindings(copy)) out += key + " = " + b.get() + "\n";
  return out;
}

/// Hash of everything that influences results (the output directory is
/// excluded so that identical runs in different places agree).
inline std::string config_hash(const RunConfig& rc) {
  auto copy = rc;
  copy.out.clear();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(copy))));
  return buf;
}

}  // namespace motlab

#endif  // MOTLAB_CONFIG_HPP_
