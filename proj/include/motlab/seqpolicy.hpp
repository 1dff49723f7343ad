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
#ifndef MOTLAB_SEQPOLICY_HPP_
#define MOTLAB_SEQPOLICY_HPP_

// Autoregressive translation policy p(y | x): a single-layer GRU encoder, a
// GRU decoder with dot-product attention over the encoder states, and an
// affine-softmax output layer. Forward likelihood, hand-derived reverse pass,
// multinomial sampling, greedy and beam decoding.
//
// Decoder step t (s_0 = last encoder state, y_0 = BOS):
//   a_t = softmax(E s_t),  c_t = E^T a_t
//   s_{t+1} = GRU([emb(y_t); c_t], s_t)
//   p(y_{t+1} | ...) = softmax(W_out^T s_{t+1} + b_out)

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "motlab/binary_io.hpp"
#include "motlab/corpus.hpp"
#include "motlab/random.hpp"

namespace motlab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Gate-stacked GRU weights; rows are ordered [update; reset; candidate].
struct GruWeights {
  Matrix w;  // 3h x input
  Matrix u;  // 3h x h
  Vector b;  // 3h
};

/// A named, contiguous view of one parameter block.
template <class T>
struct FieldView {
  std::string_view name;
  std::span<T> values;
  Eigen::Index rows;
  Eigen::Index cols;
  bool is_bias;
};

struct PolicyParams {
  Matrix src_embed;  // src_vocab x d
  Matrix tgt_embed;  // tgt_vocab x d
  GruWeights encoder;  // input d
  GruWeights decoder;  // input d + h
  Matrix out_w;  // h x tgt_vocab
  Vector out_b;  // tgt_vocab

  Eigen::Index src_vocab() const { return src_embed.rows(); }
  Eigen::Index tgt_vocab() const { return tgt_embed.rows(); }
  Eigen::Index embed_dim() const { return src_embed.cols(); }
  Eigen::Index hidden_dim() const { return encoder.u.cols(); }

  static PolicyParams zeros(Eigen::Index src_vocab, Eigen::Index tgt_vocab,
                            Eigen::Index d, Eigen::Index h) {
    if (src_vocab < 1 || tgt_vocab < 1 || d < 1 || h < 1)
      throw std::invalid_argument("policy dimensions must all be >= 1");
    PolicyParams p;
    p.src_embed = Matrix::Zero(src_vocab, d);
    p.tgt_embed = Matrix::Zero(tgt_vocab, d);
    p.encoder = {Matrix::Zero(3 * h, d), Matrix::Zero(3 * h, h), Vector::Zero(3 * h)};
    p.decoder = {Matrix::Zero(3 * h, d + h), Matrix::Zero(3 * h, h),
                 Vector::Zero(3 * h)};
    p.out_w = Matrix::Zero(h, tgt_vocab);
    p.out_b = Vector::Zero(tgt_vocab);
    return p;
  }

  PolicyParams zeros_like() const {
    return zeros(src_vocab(), tgt_vocab(), embed_dim(), hidden_dim());
  }

  bool same_shape(const PolicyParams& o) const {
    return src_vocab() == o.src_vocab() && tgt_vocab() == o.tgt_vocab() &&
           embed_dim() == o.embed_dim() && hidden_dim() == o.hidden_dim();
  }

  /// this += alpha * other
  void axpy(double alpha, const PolicyParams& other) {
    src_embed += alpha * other.src_embed;
    tgt_embed += alpha * other.tgt_embed;
    encoder.w += alpha * other.encoder.w;
    encoder.u += alpha * other.encoder.u;
    encoder.b += alpha * other.encoder.b;
    decoder.w += alpha * other.decoder.w;
    decoder.u += alpha * other.decoder.u;
    decoder.b += alpha * other.decoder.b;
    out_w += alpha * other.out_w;
    out_b += alpha * other.out_b;
  }

  bool operator==(const PolicyParams& o) const {
    return same_shape(o) && src_embed == o.src_embed &&
           tgt_embed == o.tgt_embed && encoder.w == o.encoder.w &&
           encoder.u == o.encoder.u && encoder.b == o.encoder.b &&
           decoder.w == o.decoder.w && decoder.u == o.decoder.u &&
           decoder.b == o.decoder.b && out_w == o.out_w && out_b == o.out_b;
  }
};

/// Visits every parameter block in checkpoint order.
template <class P, class F>
  requires std::same_as<std::remove_const_t<P>, PolicyParams>
void for_each_field(P& p, F&& f) {
  using T = std::conditional_t<std::is_const_v<P>, const double, double>;
  auto mat = [&](std::string_view name, auto& m, bool bias) {
    f(FieldView<T>{name, std::span<T>(m.data(), static_cast<std::size_t>(m.size())),
                   m.rows(), m.cols(), bias});
  };
  mat("src_embed", p.src_embed, false);
  mat("tgt_embed", p.tgt_embed, false);
  mat("encoder.w", p.encoder.w, false);
  mat("encoder.u", p.encoder.u, false);
  mat("encoder.b", p.encoder.b, true);
  mat("decoder.w", p.decoder.w, false);
  mat("decoder.u", p.decoder.u, false);
  mat("decoder.b", p.decoder.b, true);
  mat("out_w", p.out_w, false);
  mat("out_b", p.out_b, true);
}

inline bool all_finite(const PolicyParams& p) {
  bool ok = true;
  for_each_field(p, [&](const FieldView<const double>& f) {
    for (double v : f.values) ok = ok && std::isfinite(v);
  });
  return ok;
}

inline double squared_norm(const PolicyParams& p) {
  double acc = 0.0;
  for_each_field(p, [&](const FieldView<const double>& f) {
    for (double v : f.values) acc += v * v;
  });
  return acc;
}

/// Uniform(-0.08, 0.08) weights, zero biases; deterministic in `seed`.
inline PolicyParams init_params(Eigen::Index src_vocab, Eigen::Index tgt_vocab,
                                Eigen::Index d, Eigen::Index h,
                                std::uint64_t seed) {
  auto p = PolicyParams::zeros(src_vocab, tgt_vocab, d, h);
  Rng rng(seed);
  for_each_field(p, [&](const FieldView<double>& f) {
    if (f.is_bias) return;
    for (double& v : f.values) v = uniform(rng, -0.08, 0.08);
  });
  return p;
}

struct Candidate {
  Sequence tokens;
  double logprob = 0.0;
  std::optional<double> feedback;
};

namespace detail {

inline Vector sigmoid(const Vector& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

struct GruCache {
  Vector x, hprev, z, r, n, rh;
};

inline Vector gru_forward(const GruWeights& g, const Vector& x,
                          const Vector& hprev, GruCache* cache) {
  const auto h = hprev.size();
  const Vector a = g.w * x + g.b;
  const Vector uzr = g.u.topRows(2 * h) * hprev;
  Vector z = sigmoid(a.segment(0, h) + uzr.segment(0, h));
  Vector r = sigmoid(a.segment(h, h) + uzr.segment(h, h));
  Vector rh = r.cwiseProduct(hprev);
  Vector n = (a.segment(2 * h, h) + g.u.bottomRows(h) * rh).array().tanh().matrix();
  Vector out = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(hprev);
  if (cache) *cache = {x, hprev, std::move(z), std::move(r), std::move(n), std::move(rh)};
  return out;
}

// Accumulates parameter gradients into `grad`, writes d/dx and returns d/dhprev.
inline Vector gru_backward(const GruWeights& g, const GruCache& c,
                           const Vector& dh, GruWeights& grad, Vector& dx) {
  const auto h = dh.size();
  const Vector dn = dh.cwiseProduct((1.0 - c.z.array()).matrix());
  const Vector dz = dh.cwiseProduct(c.hprev - c.n);
  Vector dhprev = dh.cwiseProduct(c.z);

  Vector da(3 * h);
  da.segment(2 * h, h) = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
  const Vector drh = g.u.bottomRows(h).transpose() * da.segment(2 * h, h);
  grad.u.bottomRows(h).noalias() += da.segment(2 * h, h) * c.rh.transpose();
  const Vector dr = drh.cwiseProduct(c.hprev);
  dhprev += drh.cwiseProduct(c.r);

  da.segment(0, h) = dz.cwiseProduct(c.z).cwiseProduct((1.0 - c.z.array()).matrix());
  da.segment(h, h) = dr.cwiseProduct(c.r).cwiseProduct((1.0 - c.r.array()).matrix());
  grad.u.topRows(2 * h).noalias() += da.head(2 * h) * c.hprev.transpose();
  dhprev.noalias() += g.u.topRows(2 * h).transpose() * da.head(2 * h);

  grad.w.noalias() += da * c.x.transpose();
  grad.b += da;
  dx.noalias() = g.w.transpose() * da;
  return dhprev;
}

inline void log_softmax_inplace(Vector& v) {
  const double m = v.maxCoeff();
  const double lse = m + std::log((v.array() - m).exp().sum());
  v.array() -= lse;
}

inline void check_ids(std::span<const TokenId> ids, Eigen::Index vocab,
                      std::string_view what) {
  if (ids.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  for (TokenId id : ids)
    if (id < 0 || id >= vocab)
      throw std::out_of_range(std::string(what) + " token id " +
                              std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(vocab));
}

struct EncoderTrace {
  Matrix states;  // S x h, row i = encoder state after token i
  std::vector<GruCache> steps;
};

inline EncoderTrace encode(const PolicyParams& p, std::span<const TokenId> x,
                           bool keep_cache) {
  check_ids(x, p.src_vocab(), "source");
  const auto h = p.hidden_dim();
  EncoderTrace t;
  t.states.resize(static_cast<Eigen::Index>(x.size()), h);
  if (keep_cache) t.steps.resize(x.size());
  Vector state = Vector::Zero(h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vector in = p.src_embed.row(x[i]).transpose();
    state = gru_forward(p.encoder, in, state, keep_cache ? &t.steps[i] : nullptr);
    t.states.row(static_cast<Eigen::Index>(i)) = state.transpose();
  }
  return t;
}

struct DecoderCache {
  Vector s_prev;
  Vector attn;
  TokenId prev_token;
  GruCache gru;
  Vector s_next;
  Vector probs;
};

/// One decoder step from state `s` after emitting `prev`. Returns the new
/// state and fills `logp` with log-probabilities over the target vocabulary.
inline Vector decoder_step(const PolicyParams& p, const Matrix& enc,
                           const Vector& s, TokenId prev, Vector& logp,
                           DecoderCache* cache) {
  const auto d = p.embed_dim();
  const auto h = p.hidden_dim();
  Vector attn = enc * s;
  attn.array() = (attn.array() - attn.maxCoeff()).exp();
  attn /= attn.sum();
  Vector in(d + h);
  in.head(d) = p.tgt_embed.row(prev).transpose();
  in.tail(h).noalias() = enc.transpose() * attn;
  Vector s_next = gru_forward(p.decoder, in, s, cache ? &cache->gru : nullptr);
  logp.noalias() = p.out_w.transpose() * s_next;
  logp += p.out_b;
  log_softmax_inplace(logp);
  if (cache) {
    cache->s_prev = s;
    cache->attn = std::move(attn);
    cache->prev_token = prev;
    cache->s_next = s_next;
    cache->probs = logp.array().exp().matrix();
  }
  return s_next;
}

inline Vector initial_decoder_state(const Matrix& enc) {
  return enc.row(enc.rows() - 1).transpose();
}

}  // namespace detail

/// Teacher-forced log p(y | x) = sum_t log p(y_t | y_<t, x).
inline double forward_logprob(const PolicyParams& p, std::span<const TokenId> x,
                              std::span<const TokenId> y) {
  detail::check_ids(y, p.tgt_vocab(), "target");
  const auto enc = detail::encode(p, x, false);
  Vector s = detail::initial_decoder_state(enc.states);
  Vector logp(p.tgt_vocab());
  double total = 0.0;
  TokenId prev = special::kBos;
  for (TokenId tok : y) {
    s = detail::decoder_step(p, enc.states, s, prev, logp, nullptr);
    total += logp[tok];
    prev = tok;
  }
  return total;
}

/// Teacher-forced per-step output distributions (one row per target token).
inline Matrix step_distributions(const PolicyParams& p,
                                 std::span<const TokenId> x,
                                 std::span<const TokenId> y) {
  detail::check_ids(y, p.tgt_vocab(), "target");
  const auto enc = detail::encode(p, x, false);
  Vector s = detail::initial_decoder_state(enc.states);
  Vector logp(p.tgt_vocab());
  Matrix out(static_cast<Eigen::Index>(y.size()), p.tgt_vocab());
  TokenId prev = special::kBos;
  for (std::size_t t = 0; t < y.size(); ++t) {
    s = detail::decoder_step(p, enc.states, s, prev, logp, nullptr);
    out.row(static_cast<Eigen::Index>(t)) = logp.array().exp().matrix().transpose();
    prev = y[t];
  }
  return out;
}

struct LogprobGrad {
  double logprob = 0.0;
  PolicyParams grad;
};

/// log p(y | x) and its gradient with respect to every parameter.
inline LogprobGrad logprob_and_grad(const PolicyParams& p,
                                    std::span<const TokenId> x,
                                    std::span<const TokenId> y) {
  detail::check_ids(y, p.tgt_vocab(), "target");
  const auto h = p.hidden_dim();
  const auto d = p.embed_dim();
  const auto enc = detail::encode(p, x, true);
  const Matrix& E = enc.states;

  std::vector<detail::DecoderCache> steps(y.size());
  Vector s = detail::initial_decoder_state(E);
  Vector logp(p.tgt_vocab());
  LogprobGrad out;
  TokenId prev = special::kBos;
  for (std::size_t t = 0; t < y.size(); ++t) {
    s = detail::decoder_step(p, E, s, prev, logp, &steps[t]);
    out.logprob += logp[y[t]];
    prev = y[t];
  }

  PolicyParams& g = out.grad;
  g = p.zeros_like();
  Matrix dE = Matrix::Zero(E.rows(), h);
  Vector ds_next = Vector::Zero(h);
  Vector din(d + h);
  for (std::size_t t = y.size(); t-- > 0;) {
    const auto& c = steps[t];
    Vector dlogits = -c.probs;
    dlogits[y[t]] += 1.0;
    g.out_w.noalias() += c.s_next * dlogits.transpose();
    g.out_b += dlogits;
    Vector ds = ds_next;
    ds.noalias() += p.out_w * dlogits;

    Vector ds_prev = detail::gru_backward(p.decoder, c.gru, ds, g.decoder, din);
    g.tgt_embed.row(c.prev_token) += din.head(d).transpose();
    const Vector dctx = din.tail(h);

    // context = E^T attn, attn = softmax(E s_prev)
    const Vector dattn = E * dctx;
    dE.noalias() += c.attn * dctx.transpose();
    const Vector dscore =
        c.attn.cwiseProduct((dattn.array() - c.attn.dot(dattn)).matrix());
    ds_prev.noalias() += E.transpose() * dscore;
    dE.noalias() += dscore * c.s_prev.transpose();
    ds_next = std::move(ds_prev);
  }
  dE.row(dE.rows() - 1) += ds_next.transpose();

  Vector dh_next = Vector::Zero(h);
  Vector dx(d);
  for (std::size_t i = x.size(); i-- > 0;) {
    const Vector dh = dE.row(static_cast<Eigen::Index>(i)).transpose() + dh_next;
    dh_next = detail::gru_backward(p.encoder, enc.steps[i], dh, g.encoder, dx);
    g.src_embed.row(x[i]) += dx.transpose();
  }
  return out;
}

inline PolicyParams grad_logprob(const PolicyParams& p,
                                 std::span<const TokenId> x,
                                 std::span<const TokenId> y) {
  return logprob_and_grad(p, x, y).grad;
}

/// Draws tokens from the model distribution until EOS or `max_len` tokens.
template <class G>
Candidate sample_multinomial(const PolicyParams& p, std::span<const TokenId> x,
                             G& rng, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  const auto enc = detail::encode(p, x, false);
  Vector s = detail::initial_decoder_state(enc.states);
  Vector logp(p.tgt_vocab());
  Candidate c;
  TokenId prev = special::kBos;
  while (c.tokens.size() < max_len) {
    s = detail::decoder_step(p, enc.states, s, prev, logp, nullptr);
    const double u = uniform01(rng);
    double acc = 0.0;
    TokenId tok = static_cast<TokenId>(logp.size() - 1);
    for (Eigen::Index v = 0; v < logp.size(); ++v) {
      acc += std::exp(logp[v]);
      if (u < acc) {
        tok = static_cast<TokenId>(v);
        break;
      }
    }
    c.tokens.push_back(tok);
    c.logprob += logp[tok];
    if (tok == special::kEos) break;
    prev = tok;
  }
  return c;
}

/// Argmax token per step; ties go to the lowest id.
inline Candidate decode_greedy(const PolicyParams& p, std::span<const TokenId> x,
                               std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  const auto enc = detail::encode(p, x, false);
  Vector s = detail::initial_decoder_state(enc.states);
  Vector logp(p.tgt_vocab());
  Candidate c;
  TokenId prev = special::kBos;
  while (c.tokens.size() < max_len) {
    s = detail::decoder_step(p, enc.states, s, prev, logp, nullptr);
    Eigen::Index best;
    logp.maxCoeff(&best);
    const auto tok = static_cast<TokenId>(best);
    c.tokens.push_back(tok);
    c.logprob += logp[best];
    if (tok == special::kEos) break;
    prev = tok;
  }
  return c;
}

/// Beam search. At each step all expansions of the live hypotheses are ranked
/// and the best `beam_width` are kept; those ending in EOS finish, and
/// hypotheses reaching `max_len` finish truncated. Returns the finished
/// hypothesis with the highest total log-probability.
inline Candidate decode_beam(const PolicyParams& p, std::span<const TokenId> x,
                             std::size_t beam_width, std::size_t max_len) {
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  const auto enc = detail::encode(p, x, false);

  struct Hyp {
    Sequence tokens;
    double logprob;
    Vector state;
  };
  struct Expansion {
    double logprob;
    std::size_t parent;
    TokenId token;
  };

  std::vector<Hyp> live{{{}, 0.0, detail::initial_decoder_state(enc.states)}};
  std::optional<Candidate> best;
  Vector logp(p.tgt_vocab());
  std::vector<Vector> next_states;
  std::vector<Expansion> expansions;

  while (!live.empty()) {
    // Log-probabilities only decrease with length.
    if (best) {
      double top_live = -std::numeric_limits<double>::infinity();
      for (const auto& hyp : live) top_live = std::max(top_live, hyp.logprob);
      if (top_live <= best->logprob) break;
    }
    expansions.clear();
    next_states.clear();
    for (std::size_t i = 0; i < live.size(); ++i) {
      const TokenId prev = live[i].tokens.empty() ? special::kBos : live[i].tokens.back();
      next_states.push_back(
          detail::decoder_step(p, enc.states, live[i].state, prev, logp, nullptr));
      for (Eigen::Index v = 0; v < logp.size(); ++v)
        expansions.push_back({live[i].logprob + logp[v], i, static_cast<TokenId>(v)});
    }
    const auto keep = std::min(beam_width, expansions.size());
    std::partial_sort(expansions.begin(),
                      expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), [](const Expansion& a, const Expansion& b) {
                        if (a.logprob != b.logprob) return a.logprob > b.logprob;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hyp> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& e = expansions[k];
      Sequence tokens = live[e.parent].tokens;
      tokens.push_back(e.token);
      if (e.token == special::kEos || tokens.size() >= max_len) {
        if (!best || e.logprob > best->logprob)
          best = Candidate{std::move(tokens), e.logprob, std::nullopt};
      } else {
        next.push_back({std::move(tokens), e.logprob, next_states[e.parent]});
      }
    }
    live = std::move(next);
  }
  return *best;
}

// Checkpoint: magic "MOTLAB1", dims (src_vocab, tgt_vocab, d, h).
inline constexpr std::string_view kPolicyMagic = "MOTLAB1";

inline void save_policy(std::ostream& os, const PolicyParams& p) {
  const std::uint64_t dims[] = {
      static_cast<std::uint64_t>(p.src_vocab()), static_cast<std::uint64_t>(p.tgt_vocab()),
      static_cast<std::uint64_t>(p.embed_dim()), static_cast<std::uint64_t>(p.hidden_dim())};
  binio::write_header(os, kPolicyMagic, dims);
  for_each_field(p, [&](const FieldView<const double>& f) {
    binio::put_doubles(os, f.values);
  });
}

inline PolicyParams load_policy(std::istream& is) {
  const auto dims = binio::read_header(is, kPolicyMagic);
  if (dims.size() != 4) throw std::runtime_error("policy checkpoint: expected 4 dims");
  auto p = PolicyParams::zeros(static_cast<Eigen::Index>(dims[0]),
                               static_cast<Eigen::Index>(dims[1]),
                               static_cast<Eigen::Index>(dims[2]),
                               static_cast<Eigen::Index>(dims[3]));
  for_each_field(p, [&](const FieldView<double>& f) { binio::get_doubles(is, f.values); });
  return p;
}

}  // namespace motlab

#endif  // MOTLAB_SEQPOLICY_HPP_
