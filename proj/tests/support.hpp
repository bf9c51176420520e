// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0
// Test doubles and helpers shared by the unit and acceptance suites.

#ifndef ZETT_TESTS_SUPPORT_HPP_
#define ZETT_TESTS_SUPPORT_HPP_

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "zett/zett.hpp"

namespace zett::testing {

/// Every token equally likely.
class UniformBackend final : public ScoringBackend {
 public:
  explicit UniformBackend(std::size_t v) : v_(v) {}
  std::size_t vocab_size() const override { return v_; }
  std::vector<double> next_token_logprobs(std::span<const TokenId>,
                                          std::span<const TokenId>) const override {
    return std::vector<double>(v_, -std::log(static_cast<double>(v_)));
  }

 private:
  std::size_t v_;
};

/// Pseudo-random but fixed distributions keyed by (salt, input, prefix).
class HashBackend final : public ScoringBackend {
 public:
  HashBackend(std::size_t v, std::uint64_t salt, double scale = 2.0) : v_(v), salt_(salt), scale_(scale) {}
  std::size_t vocab_size() const override { return v_; }
  std::vector<double> next_token_logprobs(std::span<const TokenId> input,
                                          std::span<const TokenId> prefix) const override {
    std::uint64_t h = salt_ * 0x9e3779b97f4a7c15ULL + 17;
    const auto mix = [&](std::uint64_t x) { h = (h ^ x) * 0x100000001b3ULL; };
    for (TokenId t : input) mix(static_cast<std::uint64_t>(t) + 1);
    mix(0xabcdefULL);
    for (TokenId t : prefix) mix(static_cast<std::uint64_t>(t) + 7);
    SplitMix64 rng(h);
    std::vector<double> logits(v_);
    for (auto& l : logits) l = scale_ * rng.normal();
    return log_softmax(logits.begin(), logits.end());
  }

 private:
  std::size_t v_;
  std::uint64_t salt_;
  double scale_;
};

/// Explicit per-prefix distributions; unlisted prefixes are uniform.
class ScriptedBackend final : public ScoringBackend {
 public:
  explicit ScriptedBackend(std::size_t v) : v_(v) {}
  std::size_t vocab_size() const override { return v_; }

  /// Assigns probabilities to listed tokens; the rest share what is left.
  void set(std::vector<TokenId> prefix, const std::map<TokenId, double>& probs) {
    double used = 0.0;
    for (const auto& [t, p] : probs) used += p;
    const double rest = (1.0 - used) / static_cast<double>(v_ - probs.size());
    std::vector<double> lp(v_, std::log(rest));
    for (const auto& [t, p] : probs) lp[static_cast<std::size_t>(t)] = std::log(p);
    table_[std::move(prefix)] = std::move(lp);
  }

  std::vector<double> next_token_logprobs(std::span<const TokenId>,
                                          std::span<const TokenId> prefix) const override {
    const auto it = table_.find(std::vector<TokenId>(prefix.begin(), prefix.end()));
    if (it != table_.end()) return it->second;
    return std::vector<double>(v_, -std::log(static_cast<double>(v_)));
  }

 private:
  std::size_t v_;
  std::map<std::vector<TokenId>, std::vector<double>> table_;
};

/// Puts probability `p` on the next token of a fixed target while the prefix
/// follows it; uniform elsewhere.
class TargetBackend final : public ScoringBackend {
 public:
  TargetBackend(std::size_t v, std::vector<TokenId> target, double p = 0.9)
      : v_(v), target_(std::move(target)), p_(p) {}
  std::size_t vocab_size() const override { return v_; }
  std::vector<double> next_token_logprobs(std::span<const TokenId>,
                                          std::span<const TokenId> prefix) const override {
    const bool on_path = prefix.size() < target_.size() &&
                         std::equal(prefix.begin(), prefix.end(), target_.begin());
    if (!on_path) return std::vector<double>(v_, -std::log(static_cast<double>(v_)));
    std::vector<double> lp(v_, std::log((1.0 - p_) / static_cast<double>(v_ - 1)));
    lp[static_cast<std::size_t>(target_[prefix.size()])] = std::log(p_);
    return lp;
  }

 private:
  std::size_t v_;
  std::vector<TokenId> target_;
  double p_;
};

/// A token sequence with its backend log-probability.
struct Enumerated {
  std::vector<TokenId> tokens;
  double score;
};

/// Every two-slot sequence up to max_len over `content`, scored directly.
inline std::vector<Enumerated> enumerate_two_slot(const ScoringBackend& b, const std::vector<TokenId>& input,
                                           const std::vector<TokenId>& content, std::size_t max_len) {
  std::vector<Enumerated> out;
  std::vector<TokenId> seq{tok::kMask1};
  const std::function<void(bool)> grow = [&](bool second) {
    if (seq.size() >= max_len) return;
    for (TokenId c : content) {
      seq.push_back(c);
      if (seq.size() < max_len) {
        if (!second) {
          seq.push_back(tok::kMask2);
          grow(true);
          seq.pop_back();
        } else {
          for (TokenId t : {tok::kEos, tok::kEnd}) {
            seq.push_back(t);
            out.push_back({seq, sequence_logprob(b, input, seq)});
            seq.pop_back();
          }
        }
      }
      grow(second);
      seq.pop_back();
    }
  };
  grow(false);
  std::sort(out.begin(), out.end(), [](const Enumerated& a, const Enumerated& c) {
    if (a.score != c.score) return a.score > c.score;
    return a.tokens < c.tokens;
  });
  return out;
}

/// Fresh scratch directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(ZETT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline RelationSpec relation(std::string id, std::string pattern, std::string description = {}) {
  if (description.empty()) description = "relation " + id;
  return {id, id, std::move(description), {std::move(pattern)}};
}

inline Example example(std::string id, std::string context, std::vector<Triplet> triplets) {
  Example e;
  e.id = std::move(id);
  e.context = std::move(context);
  e.triplets = std::move(triplets);
  return e;
}

inline ExamplePrediction prediction(std::string id, std::vector<std::pair<Triplet, double>> ranked) {
  ExamplePrediction p{std::move(id), {}};
  for (auto& [t, s] : ranked) p.ranked.push_back({std::move(t), s, 0.0, {}});
  return p;
}

}  // namespace zett::testing

#endif  // ZETT_TESTS_SUPPORT_HPP_
