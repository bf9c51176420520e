// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_TEMPLATE_GEN_HPP_
#define ZETT_TEMPLATE_GEN_HPP_

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "zett/data_model.hpp"
#include "zett/decoder.hpp"

namespace zett {

enum class TemplateSource { Mined, Paraphrased, Autogen };

inline std::string to_string(TemplateSource s) {
  switch (s) {
    case TemplateSource::Mined: return "mined";
    case TemplateSource::Paraphrased: return "paraphrased";
    case TemplateSource::Autogen: return "autogen";
  }
  return "?";
}

struct TemplateCandidate {
  std::string pattern;
  TemplateSource source = TemplateSource::Mined;
  std::size_t support = 0;
  double lm_score = 0.0;
};

namespace detail {
inline std::ptrdiff_t find_span(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty()) return -1;
  const auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end());
  return it == hay.end() ? -1 : it - hay.begin();
}
}  // namespace detail

struct MiningResult {
  std::vector<TemplateCandidate> candidates;
  /// Example ids skipped because an entity was not found in the context.
  std::vector<std::string> skipped;
};

/// Middle-word rule over the triplets of `relation`: the tokens strictly
/// between the first occurrences of head and tail become the pattern, with
/// placeholders in text order. Overlapping or adjacent entities yield nothing.
inline MiningResult mine_templates(const Dataset& corpus, const std::string& relation,
                                   std::size_t top_k) {
  MiningResult out;
  std::map<std::string, std::size_t> support;
  for (const auto& e : corpus.examples) {
    const auto ctx = tokenize(e.context);
    for (const auto& t : e.triplets) {
      if (t.relation != relation) continue;
      const auto h = tokenize(t.head), tl = tokenize(t.tail);
      const auto hp = detail::find_span(ctx, h), tp = detail::find_span(ctx, tl);
      if (hp < 0 || tp < 0) {
        out.skipped.push_back(e.id);
        continue;
      }
      const bool head_first = hp < tp;
      const std::size_t a_end = static_cast<std::size_t>(head_first ? hp + std::ssize(h) : tp + std::ssize(tl));
      const std::size_t b_start = static_cast<std::size_t>(head_first ? tp : hp);
      if (b_start <= a_end) continue;
      std::vector<std::string> middle(ctx.begin() + static_cast<std::ptrdiff_t>(a_end),
                                      ctx.begin() + static_cast<std::ptrdiff_t>(b_start));
      const std::string first(head_first ? kHeadPlaceholder : kTailPlaceholder);
      const std::string second(head_first ? kTailPlaceholder : kHeadPlaceholder);
      const std::string pattern = first + " " + join(middle) + " " + second;
      validate_template(pattern, relation);
      ++support[pattern];
    }
  }
  for (const auto& [p, n] : support) out.candidates.push_back({p, TemplateSource::Mined, n, 0.0});
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const auto& a, const auto& b) { return a.support > b.support; });
  if (out.candidates.size() > top_k) out.candidates.resize(top_k);
  return out;
}

/// Source of paraphrase candidates for a template, e.g. a back-translation
/// system run offline.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::vector<std::string> paraphrase(const std::string& pattern, std::size_t n) const = 0;
};

/// Deterministic stand-in: one-word synonym swaps and single-word drops of
/// the pattern, cycled to fill n outputs. The unchanged pattern comes first.
class RuleParaphraser final : public Paraphraser {
 public:
  RuleParaphraser() = default;
  explicit RuleParaphraser(std::map<std::string, std::vector<std::string>> synonyms)
      : synonyms_(std::move(synonyms)) {}

  std::vector<std::string> variants(const std::string& pattern) const {
    const auto words = split_ws(pattern);
    std::vector<std::string> out{join(words)};
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto it = synonyms_.find(words[i]);
      if (it == synonyms_.end()) continue;
      for (const auto& s : it->second) {
        auto w = words;
        w[i] = s;
        out.push_back(join(w));
      }
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] == kHeadPlaceholder || words[i] == kTailPlaceholder || words.size() <= 3) continue;
      auto w = words;
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back(join(w));
    }
    return out;
  }

  std::vector<std::string> paraphrase(const std::string& pattern, std::size_t n) const override {
    const auto v = variants(pattern);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(v[i % v.size()]);
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> synonyms_ = {
      {"is", {"was"}},          {"by", {"through"}},      {"of", {"for"}},
      {"the", {"a"}},           {"works", {"is employed"}}, {"in", {"within"}},
      {"located", {"situated"}}, {"born", {"birthed"}},    {"member", {"part"}}};
};

/// Paraphrase candidates that keep exactly one `<head>` and one `<tail>`.
inline std::vector<std::string> valid_patterns(const std::vector<std::string>& candidates) {
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    try {
      validate_template(c);
      out.push_back(normalize_ws(c));
    } catch (const DataError&) {
    }
  }
  return out;
}

enum class ParaphrasePolicy { Top1, Random };

/// Top1: most frequent valid pattern, lexicographically smallest on ties.
/// Random: a uniform draw over the distinct valid patterns (sorted), using
/// the "paraphrase-select" substream of `seed`.
inline std::string select_paraphrase(const std::vector<std::string>& candidates,
                                     ParaphrasePolicy policy, std::uint64_t seed = 0) {
  const auto valid = valid_patterns(candidates);
  if (valid.empty()) throw DataError("select_paraphrase: no valid candidate pattern");
  std::map<std::string, std::size_t> freq;
  for (const auto& p : valid) ++freq[p];
  if (policy == ParaphrasePolicy::Top1) {
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it)
      if (it->second > best->second) best = it;
    return best->first;
  }
  auto rng = SplitMix64::substream(seed, "paraphrase-select");
  auto it = freq.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(rng.below(freq.size())));
  return it->first;
}

/// Paraphrased-template sets: {relation_id: [pattern, ...]}.
inline nlohmann::json template_map_json(const std::map<std::string, std::vector<std::string>>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [r, ps] : m) j[r] = ps;
  return j;
}

inline std::map<std::string, std::vector<std::string>> load_template_map(const std::string& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw DataError("template map " + path + " must be a JSON object");
    return j.get<std::map<std::string, std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed template map " + path + ": " + e.what());
  }
}

struct AutogenConfig {
  int beam_size = 20;
  std::size_t top_k = 2;
  bool vocab_constraint = true;
  int max_span_len = 16;
  unsigned threads = 1;
};

/// Infill-style prompt "context HEAD <X> TAIL" (or tail first) whose single
/// slot is decoded as the relation phrase.
inline MaskedPrompt span_prompt(std::string_view context, const Triplet& t, bool head_first) {
  MaskedPrompt p;
  p.relation = t.relation;
  p.context = std::string(context);
  const auto& a = head_first ? t.head : t.tail;
  const auto& b = head_first ? t.tail : t.head;
  p.masked_template = normalize_ws(a) + " " + std::string(tok::kMask1Text) + " " + normalize_ws(b);
  p.prompt_text = p.context + " " + p.masked_template;
  return p;
}

/// Mean log-probability of the gold infilling target under `pattern` across
/// the labeled examples of its relation.
inline double pattern_lm_score(const ScoringBackend& backend, const Vocabulary& vocab,
                               const std::vector<std::pair<std::string, Triplet>>& labeled,
                               const std::string& pattern) {
  double total = 0.0;
  for (const auto& [context, t] : labeled) {
    const auto prompt = mask(validate_template(pattern, t.relation), context);
    const auto input = prompt_input_ids(prompt, vocab, backend.max_input_len());
    const auto target = encode(build_target(t, prompt), vocab);
    total += sequence_logprob(backend, input, target);
  }
  return labeled.empty() ? 0.0 : total / static_cast<double>(labeled.size());
}

/// Decodes the phrase between head and tail for every labeled example (both
/// orders), turns each span into a pattern with a trailing period, scores
/// every distinct pattern and keeps the best top_k (lm_score desc, pattern asc).
inline std::vector<TemplateCandidate> autogen_templates(const ScoringBackend& backend,
                                                        const Vocabulary& vocab,
                                                        const Dataset& labeled_set,
                                                        const std::string& relation,
                                                        const AutogenConfig& cfg = {}) {
  std::vector<std::pair<std::string, Triplet>> labeled;
  for (const auto& e : labeled_set.examples)
    for (const auto& t : e.triplets)
      if (t.relation == relation) labeled.emplace_back(e.context, t);
  if (labeled.empty()) throw DataError("autogen_templates: no labeled examples for " + relation);

  DecodeConfig dc;
  dc.beam_size = cfg.beam_size;
  dc.max_candidates_per_relation = cfg.beam_size;
  dc.max_output_len = cfg.max_span_len;
  dc.vocab_constraint = cfg.vocab_constraint;
  dc.grammar = OutputGrammar::OneSlot;

  std::vector<std::vector<std::string>> found(labeled.size());
  parallel_for(labeled.size(), cfg.threads, [&](std::size_t i) {
    const auto& [context, t] = labeled[i];
    for (bool head_first : {true, false}) {
      for (const auto& d : beam_search(backend, vocab, span_prompt(context, t, head_first), dc)) {
        const std::string span = normalize_ws(d.parsed.raw.span1);
        if (span.empty()) continue;
        const std::string a(head_first ? kHeadPlaceholder : kTailPlaceholder);
        const std::string b(head_first ? kTailPlaceholder : kHeadPlaceholder);
        found[i].push_back(a + " " + span + " " + b + " .");
      }
    }
  });
  std::set<std::string> patterns;
  for (const auto& f : found)
    for (const auto& p : f) {
      try {
        validate_template(p, relation);
        patterns.insert(p);
      } catch (const DataError&) {
        // a span that itself contains a placeholder string
      }
    }

  std::vector<TemplateCandidate> out;
  for (const auto& p : patterns) {
    TemplateCandidate c{p, TemplateSource::Autogen, 0, 0.0};
    for (const auto& f : found) c.support += static_cast<std::size_t>(std::count(f.begin(), f.end(), p));
    c.lm_score = pattern_lm_score(backend, vocab, labeled, p);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.lm_score > b.lm_score; });
  if (out.size() > cfg.top_k) out.resize(cfg.top_k);
  return out;
}

inline nlohmann::json candidates_json(const std::vector<TemplateCandidate>& cands) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cands)
    arr.push_back({{"pattern", c.pattern}, {"source", to_string(c.source)},
                   {"support", c.support}, {"lm_score", c.lm_score}});
  return arr;
}

}  // namespace zett

#endif  // ZETT_TEMPLATE_GEN_HPP_
