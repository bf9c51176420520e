// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_DECODER_HPP_
#define ZETT_DECODER_HPP_

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "zett/backend.hpp"
#include "zett/templates.hpp"
#include "zett/tokenizer.hpp"
#include "zett/types.hpp"

namespace zett {

/// Output grammar enforced during search.
///   TwoSlot: <X> w+ <Y> w+ (<Z> | </s>)   (entity-pair infilling)
///   OneSlot: <X> w+ (<Z> | </s>)          (template-span generation)
///   Free:    any allowed token; finishes on <Z> or </s>
enum class OutputGrammar { TwoSlot, OneSlot, Free };

struct DecodeConfig {
  int beam_size = 4;
  int max_candidates_per_relation = 4;
  int max_output_len = 64;
  bool vocab_constraint = true;
  bool greedy = false;
  OutputGrammar grammar = OutputGrammar::TwoSlot;

  int effective_beam() const noexcept { return greedy ? 1 : beam_size; }

  void validate() const {
    if (beam_size < 1) throw DataError("decode config: beam_size must be >= 1");
    if (max_candidates_per_relation < 1 || max_candidates_per_relation > beam_size)
      throw DataError("decode config: max_candidates_per_relation must lie in [1, beam_size]");
    if (max_output_len < 1) throw DataError("decode config: max_output_len must be >= 1");
  }
};

struct Hypothesis {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  bool finished = false;
};

/// Score descending, then token sequence ascending.
inline bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

/// Context token ids (PAD and UNK excluded) plus MASK1, MASK2, END and EOS,
/// sorted ascending. Only the context half of the prompt contributes.
inline std::vector<TokenId> allowed_tokens(const MaskedPrompt& prompt, const Vocabulary& vocab) {
  std::vector<TokenId> ids = {tok::kEos, tok::kMask1, tok::kMask2, tok::kEnd};
  for (TokenId id : encode(prompt.context, vocab))
    if (id >= tok::kNumReserved) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

/// Model input ids for a prompt: context tokens then template tokens. When
/// the total exceeds `max_len`, context tokens are dropped from the end.
inline std::vector<TokenId> prompt_input_ids(const MaskedPrompt& prompt, const Vocabulary& vocab,
                                             std::size_t max_len) {
  std::vector<TokenId> ctx = encode(prompt.context, vocab);
  const std::vector<TokenId> tpl = encode(prompt.masked_template, vocab);
  if (tpl.size() > max_len) throw DataError("masked template alone exceeds the model input length");
  if (ctx.size() + tpl.size() > max_len) ctx.resize(max_len - tpl.size());
  ctx.insert(ctx.end(), tpl.begin(), tpl.end());
  return ctx;
}

namespace detail {

inline bool is_terminal(TokenId id) noexcept { return id == tok::kEnd || id == tok::kEos; }

/// Tokens that may follow `prefix`; `content` holds the allowed
/// non-structural ids (sorted).
inline void next_allowed(std::span<const TokenId> prefix, const std::vector<TokenId>& content,
                         OutputGrammar grammar, std::vector<TokenId>& out) {
  out.clear();
  if (grammar == OutputGrammar::Free) {
    out = content;
    for (TokenId s : {tok::kEos, tok::kMask1, tok::kMask2, tok::kEnd}) out.push_back(s);
    std::sort(out.begin(), out.end());
    return;
  }
  if (prefix.empty()) {
    out.push_back(tok::kMask1);
    return;
  }
  const bool after_sentinel = prefix.back() == tok::kMask1 || prefix.back() == tok::kMask2;
  const bool seen_mask2 = std::find(prefix.begin(), prefix.end(), tok::kMask2) != prefix.end();
  out = content;
  if (after_sentinel) return;
  if (grammar == OutputGrammar::TwoSlot && !seen_mask2) {
    out.push_back(tok::kMask2);
  } else {
    out.push_back(tok::kEos);
    out.push_back(tok::kEnd);
  }
  std::sort(out.begin(), out.end());
}

inline std::vector<TokenId> content_tokens(const MaskedPrompt& prompt, const Vocabulary& vocab,
                                           std::size_t vocab_size, bool constrained) {
  std::vector<TokenId> content;
  if (constrained) {
    for (TokenId id : allowed_tokens(prompt, vocab))
      if (!tok::is_structural(id)) content.push_back(id);
  } else {
    for (std::size_t id = tok::kNumReserved; id < vocab_size; ++id)
      content.push_back(static_cast<TokenId>(id));
  }
  return content;
}

}  // namespace detail

/// One finished, well-formed beam output.
struct DecodedOutput {
  std::vector<TokenId> tokens;
  double score = 0.0;
  ParsedPair parsed;
};

/// Finished hypotheses of a length-synchronous beam search, best first, with
/// no parse filtering and no truncation. Each step expands every live
/// hypothesis over the tokens the grammar and vocabulary constraint allow,
/// keeps the best `beam` expansions, and retires those ending in END/EOS.
/// Search stops once `keep` finished hypotheses all strictly beat the best
/// live one (log-probabilities only decrease, so the top `keep` is final).
inline std::vector<Hypothesis> beam_search_raw(DecodeSession& session,
                                               const std::vector<TokenId>& content,
                                               OutputGrammar grammar, int beam, int max_len,
                                               std::size_t keep) {
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  std::vector<TokenId> next;
  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> expanded;
    for (const auto& h : live) {
      detail::next_allowed(h.tokens, content, grammar, next);
      if (next.empty()) continue;
      const std::vector<double> lp = session.next_token_logprobs(h.tokens);
      for (TokenId t : next) {
        Hypothesis c;
        c.tokens.reserve(h.tokens.size() + 1);
        c.tokens = h.tokens;
        c.tokens.push_back(t);
        c.logprob = h.logprob + lp[static_cast<std::size_t>(t)];
        c.finished = detail::is_terminal(t);
        expanded.push_back(std::move(c));
      }
    }
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(beam), expanded.size());
    std::partial_sort(expanded.begin(), expanded.begin() + static_cast<std::ptrdiff_t>(width),
                      expanded.end(), hypothesis_before);
    expanded.resize(width);
    live.clear();
    for (auto& h : expanded) (h.finished ? finished : live).push_back(std::move(h));
    std::sort(finished.begin(), finished.end(), hypothesis_before);
    if (!live.empty() && finished.size() >= keep && keep > 0 &&
        finished[keep - 1].logprob > live.front().logprob)
      break;
  }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  return finished;
}

/// Constrained beam search over one prompt. Returns up to
/// max_candidates_per_relation parseable outputs; an empty list when nothing
/// well-formed finishes within max_output_len.
inline std::vector<DecodedOutput> beam_search(const ScoringBackend& backend,
                                              const Vocabulary& vocab, const MaskedPrompt& prompt,
                                              const DecodeConfig& cfg) {
  cfg.validate();
  const auto input = prompt_input_ids(prompt, vocab, backend.max_input_len());
  auto session = backend.open(input);
  const auto content =
      detail::content_tokens(prompt, vocab, backend.vocab_size(), cfg.vocab_constraint);
  const std::size_t want = static_cast<std::size_t>(
      cfg.greedy ? 1 : std::min(cfg.max_candidates_per_relation, cfg.beam_size));
  // Malformed outputs are only possible without a grammar; then search to the end.
  const std::size_t keep = cfg.grammar == OutputGrammar::Free ? 0 : want;
  const int max_len = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.max_output_len), backend.max_output_len()));
  const auto finished =
      beam_search_raw(*session, content, cfg.grammar, cfg.effective_beam(), max_len, keep);
  std::vector<DecodedOutput> out;
  for (const auto& h : finished) {
    if (out.size() >= want) break;
    try {
      DecodedOutput d;
      if (cfg.grammar == OutputGrammar::OneSlot) {
        std::vector<std::string> span;
        for (std::size_t i = 1; i + 1 < h.tokens.size(); ++i) span.push_back(vocab.token(h.tokens[i]));
        if (span.empty()) continue;
        d.parsed.raw.span1 = join(span);
      } else {
        d.parsed = parse_output(h.tokens, vocab, prompt);
      }
      d.tokens = h.tokens;
      d.score = h.logprob;
      out.push_back(std::move(d));
    } catch (const ParseError&) {
      // malformed or null-span hypothesis: discarded
    }
  }
  return out;
}

/// Plain step-wise argmax under the same grammar and constraint (ties go to
/// the lowest token id). Kept separate from beam_search as its cross-check.
inline std::optional<Hypothesis> greedy_decode(const ScoringBackend& backend,
                                               const Vocabulary& vocab,
                                               const MaskedPrompt& prompt,
                                               const DecodeConfig& cfg) {
  const auto input = prompt_input_ids(prompt, vocab, backend.max_input_len());
  const auto content =
      detail::content_tokens(prompt, vocab, backend.vocab_size(), cfg.vocab_constraint);
  const int max_len = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.max_output_len), backend.max_output_len()));
  Hypothesis h;
  std::vector<TokenId> next;
  for (int step = 0; step < max_len; ++step) {
    detail::next_allowed(h.tokens, content, cfg.grammar, next);
    if (next.empty()) return std::nullopt;
    const auto lp = backend.next_token_logprobs(input, h.tokens);
    TokenId best = next.front();
    for (TokenId t : next)
      if (lp[static_cast<std::size_t>(t)] > lp[static_cast<std::size_t>(best)]) best = t;
    h.tokens.push_back(best);
    h.logprob += lp[static_cast<std::size_t>(best)];
    if (detail::is_terminal(best)) {
      h.finished = true;
      return h;
    }
  }
  return std::nullopt;
}

/// A candidate triplet with its sequence score.
struct ScoredCandidate {
  Triplet triplet;
  double score = 0.0;
  double relation_similarity = 0.0;
  std::string template_used;
};

/// Triplet order used everywhere for ranking: score desc, then relation,
/// head and tail ascending.
inline bool candidate_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.triplet.relation, a.triplet.head, a.triplet.tail) <
         std::tie(b.triplet.relation, b.triplet.head, b.triplet.tail);
}

/// Collapse identical (normalized) triplets keeping the best score, then sort.
inline std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> cands) {
  std::map<Triplet, ScoredCandidate> best;
  for (auto& c : cands) {
    c.triplet = normalized(std::move(c.triplet));
    auto it = best.find(c.triplet);
    if (it == best.end())
      best.emplace(c.triplet, std::move(c));
    else if (c.score > it->second.score ||
             (c.score == it->second.score && c.template_used < it->second.template_used))
      it->second = std::move(c);
  }
  std::vector<ScoredCandidate> out;
  out.reserve(best.size());
  for (auto& [k, v] : best) out.push_back(std::move(v));
  std::sort(out.begin(), out.end(), candidate_before);
  return out;
}

/// Turn decoded outputs for one template into ranked, deduplicated candidates.
inline std::vector<ScoredCandidate> candidates_from(const std::vector<DecodedOutput>& decoded,
                                                    const Template& tpl) {
  std::vector<ScoredCandidate> cands;
  for (const auto& d : decoded)
    cands.push_back({Triplet{d.parsed.head, tpl.relation, d.parsed.tail}, d.score, 0.0, tpl.pattern});
  return rank_candidates(std::move(cands));
}

/// mask -> beam search -> parse -> candidates for one relation template.
inline std::vector<ScoredCandidate> decode_relation(const ScoringBackend& backend,
                                                    const Vocabulary& vocab,
                                                    std::string_view context, const Template& tpl,
                                                    const DecodeConfig& cfg) {
  return candidates_from(beam_search(backend, vocab, mask(tpl, context), cfg), tpl);
}

}  // namespace zett

#endif  // ZETT_DECODER_HPP_
