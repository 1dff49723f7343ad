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
#ifndef MOTLAB_CORPUS_HPP_
#define MOTLAB_CORPUS_HPP_

// Synthetic bilingual sentiment corpus: vocabularies, labeled parallel
// examples, deterministic generation, class balancing and the line-oriented
// text serialization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "motlab/random.hpp"

namespace motlab {

using TokenId = std::int32_t;
using Sequence = std::vector<TokenId>;

namespace special {
inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kPad = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kCount = 4;
}  // namespace special

enum class Polarity : int { Negative = 0, Positive = 1 };

inline std::string_view to_string(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

inline Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  throw std::invalid_argument("unknown polarity label '" + std::string(s) + "'");
}

inline Polarity opposite(Polarity p) {
  return p == Polarity::Positive ? Polarity::Negative : Polarity::Positive;
}

/// Bidirectional token <-> id map. Ids 0..3 are BOS, EOS, PAD, UNK and render
/// as the literal markers below.
class Vocabulary {
 public:
  static constexpr std::string_view kMarkers[special::kCount] = {"BOS", "EOS",
                                                                 "PAD", "UNK"};

  Vocabulary() {
    for (auto m : kMarkers) {
      index_.emplace(std::string(m), static_cast<TokenId>(tokens_.size()));
      tokens_.emplace_back(m);
    }
  }

  /// Builds from a full token list whose first four entries are the markers.
  static Vocabulary from_tokens(std::span<const std::string> all) {
    if (all.size() < special::kCount)
      throw std::invalid_argument("vocabulary: fewer than 4 entries");
    for (TokenId i = 0; i < special::kCount; ++i)
      if (all[i] != kMarkers[i])
        throw std::invalid_argument("vocabulary: id " + std::to_string(i) +
                                    " must be " + std::string(kMarkers[i]));
    Vocabulary v;
    for (std::size_t i = special::kCount; i < all.size(); ++i) v.add(all[i]);
    return v;
  }

  TokenId add(const std::string& token) {
    if (token.empty()) throw std::invalid_argument("vocabulary: empty token");
    if (token.front() == '#' ||
        token.find_first_of(" \t\r\n") != std::string::npos)
      throw std::invalid_argument("vocabulary: token '" + token +
                                  "' starts with '#' or contains whitespace");
    for (auto m : kMarkers)
      if (token == m)
        throw std::invalid_argument("vocabulary: '" + token +
                                    "' is a reserved marker");
    auto [it, inserted] =
        index_.emplace(token, static_cast<TokenId>(tokens_.size()));
    if (!inserted)
      throw std::invalid_argument("vocabulary: duplicate token '" + token + "'");
    tokens_.push_back(token);
    return it->second;
  }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(std::string_view token) const {
    return find(token).value_or(special::kUnk);
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw std::out_of_range("token id " + std::to_string(id) +
                              " outside vocabulary of size " +
                              std::to_string(tokens_.size()));
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

inline Sequence encode(const Vocabulary& vocab,
                       std::span<const std::string> tokens) {
  Sequence ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

inline std::vector<std::string> decode(const Vocabulary& vocab,
                                       std::span<const TokenId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

inline bool is_special(TokenId id) { return id >= 0 && id < special::kCount; }

/// Drops BOS/EOS/PAD; UNK is kept as a regular token.
inline Sequence strip_specials(std::span<const TokenId> ids) {
  Sequence out;
  for (TokenId id : ids)
    if (id != special::kBos && id != special::kEos && id != special::kPad)
      out.push_back(id);
  return out;
}

struct LabeledParallelExample {
  Sequence source;
  std::optional<Sequence> reference;
  Polarity label = Polarity::Positive;

  bool operator==(const LabeledParallelExample&) const = default;
};

inline bool well_formed(std::span<const TokenId> seq) {
  if (seq.empty() || seq.back() != special::kEos) return false;
  return std::find(seq.begin(), seq.end(), special::kPad) == seq.end();
}

struct CorpusSizes {
  std::size_t train = 2000;
  std::size_t dev = 200;
  std::size_t test = 400;
  std::size_t target_labeled = 2000;

  bool operator==(const CorpusSizes&) const = default;
};

struct CorpusSpec {
  std::uint64_t seed = 7;
  std::size_t filler_vocab_size = 40;
  std::size_t polarity_lexicon_size = 8;
  std::size_t min_len = 4;
  std::size_t max_len = 9;
  CorpusSizes sizes;
  double negative_fraction = 0.25;
  // Share of each polarity lexicon that occurs in the parallel-train split;
  // the remaining words only occur in the task splits (domain shift).
  double train_lexicon_coverage = 1.0;

  std::size_t train_lexicon_words() const {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(train_lexicon_coverage *
                                              static_cast<double>(polarity_lexicon_size))));
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("corpus spec: " + field + " " + why);
    };
    if (filler_vocab_size < 1) fail("filler_vocab_size", "must be >= 1");
    if (polarity_lexicon_size < 1) fail("polarity_lexicon_size", "must be >= 1");
    if (min_len < 2) fail("min_len", "must be >= 2");
    if (max_len < min_len) fail("max_len", "must be >= min_len");
    if (sizes.train < 1) fail("sizes.train", "must be >= 1");
    if (sizes.dev < 1) fail("sizes.dev", "must be >= 1");
    if (sizes.test < 1) fail("sizes.test", "must be >= 1");
    if (sizes.target_labeled < 1) fail("sizes.target_labeled", "must be >= 1");
    if (!(negative_fraction > 0.0 && negative_fraction < 1.0))
      fail("negative_fraction", "must lie in (0, 1)");
    if (!(train_lexicon_coverage > 0.0 && train_lexicon_coverage <= 1.0))
      fail("train_lexicon_coverage", "must lie in (0, 1]");
  }
};

struct Corpus {
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  std::vector<LabeledParallelExample> parallel_train;
  std::vector<LabeledParallelExample> labeled_dev;
  std::vector<LabeledParallelExample> labeled_test;
  std::vector<LabeledParallelExample> target_labeled;

  bool operator==(const Corpus&) const = default;
};

/// Token layout shared by both synthetic languages: after the specials come
/// `filler` filler words, then the positive lexicon, then the negative one.
struct LexiconLayout {
  std::size_t filler = 0;
  std::size_t polarity = 0;

  TokenId filler_id(std::size_t i) const {
    return special::kCount + static_cast<TokenId>(i);
  }
  TokenId polar_id(Polarity p, std::size_t i) const {
    const auto base = special::kCount + filler;
    return static_cast<TokenId>(
        base + (p == Polarity::Negative ? polarity : 0) + i);
  }
  bool is_filler(TokenId id) const {
    return id >= special::kCount &&
           id < special::kCount + static_cast<TokenId>(filler);
  }
  std::optional<Polarity> polarity_of(TokenId id) const {
    const auto base = static_cast<TokenId>(special::kCount + filler);
    const auto p = static_cast<TokenId>(polarity);
    if (id >= base && id < base + p) return Polarity::Positive;
    if (id >= base + p && id < base + 2 * p) return Polarity::Negative;
    return std::nullopt;
  }
};

/// Label rule: sign of (#positive-lexicon tokens - #negative-lexicon tokens).
/// Returns nullopt on a zero margin.
inline std::optional<Polarity> polarity_by_count(const LexiconLayout& layout,
                                                 std::span<const TokenId> seq) {
  int margin = 0;
  for (TokenId id : seq) {
    if (auto p = layout.polarity_of(id))
      margin += *p == Polarity::Positive ? 1 : -1;
  }
  if (margin == 0) return std::nullopt;
  return margin > 0 ? Polarity::Positive : Polarity::Negative;
}

/// Swaps each adjacent pair of filler tokens inside every maximal filler run.
inline void reorder_fillers(const LexiconLayout& layout, Sequence& seq) {
  std::size_t i = 0;
  while (i < seq.size()) {
    if (!layout.is_filler(seq[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < seq.size() && layout.is_filler(seq[j])) ++j;
    for (std::size_t k = i; k + 1 < j; k += 2) std::swap(seq[k], seq[k + 1]);
    i = j;
  }
}

namespace detail {

inline Vocabulary make_language_vocab(char prefix, const LexiconLayout& layout) {
  Vocabulary v;
  auto name = [&](const char* kind, std::size_t i) {
    std::ostringstream os;
    os << prefix << kind << i;
    return os.str();
  };
  for (std::size_t i = 0; i < layout.filler; ++i) v.add(name("f", i));
  for (std::size_t i = 0; i < layout.polarity; ++i) v.add(name("p", i));
  for (std::size_t i = 0; i < layout.polarity; ++i) v.add(name("n", i));
  return v;
}

struct Dictionary {
  std::vector<TokenId> map;  // source id -> target id

  TokenId operator()(TokenId src) const { return map[src]; }
};

// Specials map to themselves; each lexical class is permuted within itself.
inline Dictionary make_dictionary(const LexiconLayout& layout, Rng& rng) {
  Dictionary d;
  const std::size_t n = special::kCount + layout.filler + 2 * layout.polarity;
  d.map.resize(n);
  for (TokenId i = 0; i < special::kCount; ++i) d.map[i] = i;
  auto permute_block = [&](TokenId first, std::size_t count) {
    std::vector<TokenId> perm(count);
    for (std::size_t i = 0; i < count; ++i)
      perm[i] = first + static_cast<TokenId>(i);
    shuffle(std::span<TokenId>(perm), rng);
    for (std::size_t i = 0; i < count; ++i)
      d.map[first + static_cast<TokenId>(i)] = perm[i];
  };
  permute_block(layout.filler_id(0), layout.filler);
  permute_block(layout.polar_id(Polarity::Positive, 0), layout.polarity);
  permute_block(layout.polar_id(Polarity::Negative, 0), layout.polarity);
  return d;
}

inline Sequence translate(const LexiconLayout& layout, const Dictionary& dict,
                          std::span<const TokenId> source) {
  Sequence out;
  out.reserve(source.size());
  for (TokenId id : source)
    if (id != special::kEos) out.push_back(dict(id));
  reorder_fillers(layout, out);
  out.push_back(special::kEos);
  return out;
}

inline LabeledParallelExample make_example(const CorpusSpec& spec,
                                           const LexiconLayout& layout,
                                           const Dictionary& dict,
                                           std::size_t lexicon_words,
                                           Polarity label, Rng& rng) {
  const auto len = spec.min_len +
                   uniform_index(rng, spec.max_len - spec.min_len + 1);
  const auto max_polar = std::min<std::size_t>(3, len - 1);
  const auto n_polar = 1 + uniform_index(rng, max_polar);

  std::vector<std::size_t> slots(len);
  for (std::size_t i = 0; i < len; ++i) slots[i] = i;
  shuffle(std::span<std::size_t>(slots), rng);
  std::vector<bool> polar_slot(len, false);
  for (std::size_t i = 0; i < n_polar; ++i) polar_slot[slots[i]] = true;

  LabeledParallelExample ex;
  ex.label = label;
  ex.source.reserve(len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    if (polar_slot[i])
      ex.source.push_back(
          layout.polar_id(label, uniform_index(rng, lexicon_words)));
    else
      ex.source.push_back(
          layout.filler_id(uniform_index(rng, spec.filler_vocab_size)));
  }
  ex.source.push_back(special::kEos);
  ex.reference = translate(layout, dict, ex.source);
  return ex;
}

inline std::vector<LabeledParallelExample> make_split(
    const CorpusSpec& spec, const LexiconLayout& layout,
    const Dictionary& dict, std::size_t size, std::size_t n_negative,
    std::size_t lexicon_words, Rng& rng) {
  std::vector<Polarity> labels(size, Polarity::Positive);
  std::fill_n(labels.begin(), n_negative, Polarity::Negative);
  shuffle(std::span<Polarity>(labels), rng);
  std::vector<LabeledParallelExample> out;
  out.reserve(size);
  for (Polarity l : labels)
    out.push_back(make_example(spec, layout, dict, lexicon_words, l, rng));
  return out;
}

}  // namespace detail

inline LexiconLayout layout_of(const CorpusSpec& spec) {
  return {spec.filler_vocab_size, spec.polarity_lexicon_size};
}

/// Pure function of `spec`. Parallel-train sentences draw polarity words from
/// the first train_lexicon_words() entries of each lexicon. Dev/test carry floor(negative_fraction * size)
/// negatives; the parallel-train and target-labeled splits are balanced
/// (floor(size / 2) negatives).
inline Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const auto layout = layout_of(spec);
  Rng rng(spec.seed);
  const auto dict = detail::make_dictionary(layout, rng);

  Corpus c;
  c.source_vocab = detail::make_language_vocab('s', layout);
  c.target_vocab = detail::make_language_vocab('t', layout);

  auto skewed = [&](std::size_t n) {
    return static_cast<std::size_t>(
        std::floor(spec.negative_fraction * static_cast<double>(n)));
  };
  const auto full = spec.polarity_lexicon_size;
  c.parallel_train = detail::make_split(spec, layout, dict, spec.sizes.train,
                                        spec.sizes.train / 2,
                                        spec.train_lexicon_words(), rng);
  c.labeled_dev = detail::make_split(spec, layout, dict, spec.sizes.dev,
                                     skewed(spec.sizes.dev), full, rng);
  c.labeled_test = detail::make_split(spec, layout, dict, spec.sizes.test,
                                      skewed(spec.sizes.test), full, rng);
  c.target_labeled =
      detail::make_split(spec, layout, dict, spec.sizes.target_labeled,
                         spec.sizes.target_labeled / 2, full, rng);
  return c;
}

inline std::size_t count_label(std::span<const LabeledParallelExample> split,
                               Polarity p) {
  return static_cast<std::size_t>(
      std::count_if(split.begin(), split.end(),
                    [p](const auto& e) { return e.label == p; }));
}

/// Balances classes: the input order is kept and minority examples are
/// appended cyclically (in original order) until both counts match.
inline std::vector<LabeledParallelExample> oversample_minority(
    std::span<const LabeledParallelExample> split) {
  if (split.empty())
    throw std::invalid_argument("oversample_minority: empty split");
  const auto n_pos = count_label(split, Polarity::Positive);
  const auto n_neg = count_label(split, Polarity::Negative);
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument(
        "oversample_minority: split contains a single class");
  const Polarity minority =
      n_neg < n_pos ? Polarity::Negative : Polarity::Positive;
  std::vector<const LabeledParallelExample*> pool;
  for (const auto& e : split)
    if (e.label == minority) pool.push_back(&e);

  std::vector<LabeledParallelExample> out(split.begin(), split.end());
  const auto extra = std::max(n_pos, n_neg) - std::min(n_pos, n_neg);
  for (std::size_t i = 0; i < extra; ++i) out.push_back(*pool[i % pool.size()]);
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization.
//   vocabulary: one token per line, in id order
//   split: <label>\t<source tokens>\t<target tokens or empty>
// Lines starting with '#' are metadata and skipped on read.

inline void write_vocabulary(std::ostream& os, const Vocabulary& v) {
  for (const auto& t : v.tokens()) os << t << '\n';
}

inline Vocabulary read_vocabulary(std::istream& is) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    tokens.push_back(line);
  }
  return Vocabulary::from_tokens(tokens);
}

namespace detail {

inline std::string join_tokens(const Vocabulary& v, std::span<const TokenId> ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += v.token(ids[i]);
  }
  return out;
}

inline Sequence split_tokens(const Vocabulary& v, std::string_view text) {
  Sequence out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) out.push_back(v.id(tok));
  return out;
}

}  // namespace detail

inline void write_split(std::ostream& os,
                        std::span<const LabeledParallelExample> split,
                        const Vocabulary& source_vocab,
                        const Vocabulary& target_vocab) {
  for (const auto& e : split) {
    os << to_string(e.label) << '\t'
       << detail::join_tokens(source_vocab, e.source) << '\t';
    if (e.reference) os << detail::join_tokens(target_vocab, *e.reference);
    os << '\n';
  }
}

inline std::vector<LabeledParallelExample> read_split(
    std::istream& is, const Vocabulary& source_vocab,
    const Vocabulary& target_vocab) {
  std::vector<LabeledParallelExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::invalid_argument("split line " + std::to_string(lineno) +
                                  ": expected 3 tab-separated fields");
    LabeledParallelExample e;
    e.label = parse_polarity(std::string_view(line).substr(0, t1));
    e.source = detail::split_tokens(
        source_vocab, std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
    auto ref = detail::split_tokens(target_vocab,
                                    std::string_view(line).substr(t2 + 1));
    if (!ref.empty()) e.reference = std::move(ref);
    if (!well_formed(e.source))
      throw std::invalid_argument("split line " + std::to_string(lineno) +
                                  ": source must be non-empty and end in EOS");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace motlab

#endif  // MOTLAB_CORPUS_HPP_
