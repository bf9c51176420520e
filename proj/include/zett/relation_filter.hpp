// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_RELATION_FILTER_HPP_
#define ZETT_RELATION_FILTER_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "zett/tokenizer.hpp"
#include "zett/types.hpp"

namespace zett {

/// Sentence encoder: text -> unit-norm vector of fixed dimension.
/// Implementations are immutable and safe for concurrent calls.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

inline void l2_normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

/// Hashed bag of words: lowercased word tokens, FNV-1a 64 modulo the
/// dimension, term-frequency weights, L2 normalization. Tokens made only of
/// punctuation are skipped; a text without words embeds to the zero vector.
class HashedBowEmbedder final : public Embedder {
 public:
  explicit HashedBowEmbedder(std::size_t dimension = 256) : dim_(dimension) {
    if (dim_ == 0) throw DataError("embedder dimension must be positive");
  }
  std::size_t dimension() const override { return dim_; }

  std::vector<double> embed(std::string_view text) const override {
    std::vector<double> v(dim_, 0.0);
    for (auto& t : tokenize(text)) {
      if (std::all_of(t.begin(), t.end(), is_ascii_punct)) continue;
      std::transform(t.begin(), t.end(), t.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      v[fnv1a64(t) % dim_] += 1.0;
    }
    l2_normalize(v);
    return v;
  }

  /// Bucket a token lands in (after lowercasing).
  std::size_t bucket(std::string token) const {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return fnv1a64(token) % dim_;
  }

 private:
  std::size_t dim_;
};

/// Vectors computed offline by an external encoder, keyed by the hex FNV-1a 64
/// hash of the exact text. File format: {"<hash>": [floats...], ...}.
class PrecomputedEmbedder final : public Embedder {
 public:
  static std::string key(std::string_view text) { return hex64(fnv1a64(text)); }

  explicit PrecomputedEmbedder(const nlohmann::json& table) {
    if (!table.is_object()) throw DataError("precomputed embeddings must be a JSON object");
    for (auto it = table.begin(); it != table.end(); ++it) {
      auto v = it.value().get<std::vector<double>>();
      if (dim_ == 0) dim_ = v.size();
      if (v.size() != dim_ || dim_ == 0) throw DataError("inconsistent embedding dimension");
      l2_normalize(v);
      vectors_.emplace(it.key(), std::move(v));
    }
  }
  static PrecomputedEmbedder load(const std::string& path) {
    try {
      return PrecomputedEmbedder(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed embedding file " + path + ": " + e.what());
    }
  }

  std::size_t dimension() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override {
    const auto it = vectors_.find(key(text));
    if (it == vectors_.end()) throw DataError("no precomputed embedding for text: " + std::string(text));
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::size_t dim_ = 0;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Cosine between the context and the relation description.
inline double similarity(const Embedder& embedder, std::string_view context,
                         const RelationSpec& relation) {
  if (normalize_ws(relation.description).empty())
    throw DataError("relation " + relation.id + " has no description");
  return dot(embedder.embed(context), embedder.embed(relation.description));
}

struct FilterConfig {
  /// Similarity threshold; values outside [-1, 1] are clamped.
  double delta = 0.85;
  bool fallback_top1 = true;

  double clamped_delta() const noexcept { return std::clamp(delta, -1.0, 1.0); }
};

/// Indices of relations whose similarity is >= delta, in input order. An empty
/// result with fallback_top1 becomes the single best index (first on ties).
inline std::vector<std::size_t> select_relations(const std::vector<double>& similarities,
                                                 const FilterConfig& cfg) {
  std::vector<std::size_t> keep;
  const double delta = cfg.clamped_delta();
  for (std::size_t i = 0; i < similarities.size(); ++i)
    if (similarities[i] >= delta) keep.push_back(i);
  if (keep.empty() && cfg.fallback_top1 && !similarities.empty())
    keep.push_back(static_cast<std::size_t>(
        std::max_element(similarities.begin(), similarities.end()) - similarities.begin()));
  return keep;
}

inline std::vector<double> relation_similarities(const Embedder& embedder,
                                                 std::string_view context,
                                                 const std::vector<RelationSpec>& relations) {
  const auto ctx = embedder.embed(context);
  std::vector<double> sims;
  sims.reserve(relations.size());
  for (const auto& r : relations) {
    if (normalize_ws(r.description).empty())
      throw DataError("relation " + r.id + " has no description");
    sims.push_back(dot(ctx, embedder.embed(r.description)));
  }
  return sims;
}

inline std::vector<RelationSpec> filter_relations(const Embedder& embedder,
                                                  std::string_view context,
                                                  const std::vector<RelationSpec>& relations,
                                                  const FilterConfig& cfg) {
  std::vector<RelationSpec> out;
  for (std::size_t i : select_relations(relation_similarities(embedder, context, relations), cfg))
    out.push_back(relations[i]);
  return out;
}

}  // namespace zett

#endif  // ZETT_RELATION_FILTER_HPP_
