// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_TOKENIZER_HPP_
#define ZETT_TOKENIZER_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "zett/common.hpp"

namespace zett {

using TokenId = std::int32_t;

namespace tok {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kMask1 = 3;
inline constexpr TokenId kMask2 = 4;
inline constexpr TokenId kEnd = 5;
inline constexpr TokenId kNumReserved = 6;

inline constexpr std::string_view kMask1Text = "<X>";
inline constexpr std::string_view kMask2Text = "<Y>";
inline constexpr std::string_view kEndText = "<Z>";

inline constexpr std::string_view kReservedText[kNumReserved] = {
    "<pad>", "<unk>", "</s>", kMask1Text, kMask2Text, kEndText};

inline bool is_structural(TokenId id) noexcept {
  return id == kMask1 || id == kMask2 || id == kEnd || id == kEos;
}
inline bool is_sentinel_text(std::string_view t) noexcept {
  return t == kMask1Text || t == kMask2Text || t == kEndText;
}
}  // namespace tok

inline bool is_ascii_punct(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && ((u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
                     (u >= 123 && u <= 126));
}

namespace detail {

// Leading and trailing ASCII punctuation become one token per character.
inline void split_punct(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t b = 0, e = chunk.size();
  while (b < e && is_ascii_punct(chunk[b])) ++b;
  if (b == e) {
    for (char c : chunk) out.emplace_back(1, c);
    return;
  }
  while (e > b && is_ascii_punct(chunk[e - 1])) --e;
  for (std::size_t i = 0; i < b; ++i) out.emplace_back(1, chunk[i]);
  out.emplace_back(chunk.substr(b, e - b));
  for (std::size_t i = e; i < chunk.size(); ++i) out.emplace_back(1, chunk[i]);
}

}  // namespace detail

/// Word-level tokenization: whitespace split, sentinel literals kept whole,
/// then leading/trailing ASCII punctuation split off character by character.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& chunk : split_ws(text)) {
    std::string_view rest = chunk;
    while (!rest.empty()) {
      std::size_t pos = std::string_view::npos;
      std::string_view hit;
      for (std::string_view s : {tok::kMask1Text, tok::kMask2Text, tok::kEndText}) {
        const std::size_t p = rest.find(s);
        if (p < pos) {
          pos = p;
          hit = s;
        }
      }
      if (pos == std::string_view::npos) {
        detail::split_punct(rest, out);
        break;
      }
      if (pos > 0) detail::split_punct(rest.substr(0, pos), out);
      out.emplace_back(hit);
      rest.remove_prefix(pos + hit.size());
    }
  }
  return out;
}

/// Token inventory. Ids 0-5 are reserved (PAD, UNK, EOS, MASK1, MASK2, END);
/// corpus tokens follow in (descending frequency, ascending text) order.
class Vocabulary {
 public:
  Vocabulary() { rebuild({}, 1); }

  static Vocabulary from_tokens(std::vector<std::string> corpus_tokens, int min_count) {
    Vocabulary v;
    v.rebuild(std::move(corpus_tokens), min_count);
    return v;
  }

  std::size_t size() const noexcept { return id_to_token_.size(); }
  int min_count() const noexcept { return min_count_; }

  TokenId id(std::string_view token) const {
    const auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? tok::kUnk : it->second;
  }
  bool contains(std::string_view token) const {
    return token_to_id_.count(std::string(token)) != 0;
  }
  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
      throw DataError("token id out of range: " + std::to_string(id));
    return id_to_token_[static_cast<std::size_t>(id)];
  }
  /// Non-reserved tokens in id order.
  std::vector<std::string> corpus_tokens() const {
    return {id_to_token_.begin() + tok::kNumReserved, id_to_token_.end()};
  }

  /// FNV-1a over the newline-joined token list; checkpoints record it.
  std::string hash() const { return hex64(fnv1a64(join(id_to_token_, "\n"))); }

  nlohmann::json to_json() const {
    return nlohmann::json{{"tokens", corpus_tokens()}, {"min_count", min_count_}};
  }
  static Vocabulary from_json(const nlohmann::json& j) {
    try {
      return from_tokens(j.at("tokens").get<std::vector<std::string>>(), j.at("min_count").get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed vocabulary: ") + e.what());
    }
  }

  void save(const std::string& path) const { write_file(path, to_json().dump() + "\n"); }
  static Vocabulary load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed vocabulary file " + path + ": " + e.what());
    }
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_ && a.min_count_ == b.min_count_;
  }

 private:
  void rebuild(std::vector<std::string> corpus_tokens, int min_count) {
    min_count_ = min_count;
    id_to_token_.assign(std::begin(tok::kReservedText), std::end(tok::kReservedText));
    token_to_id_.clear();
    for (TokenId i = 0; i < tok::kNumReserved; ++i) token_to_id_.emplace(id_to_token_[i], i);
    for (auto& t : corpus_tokens) {
      if (token_to_id_.count(t)) throw DataError("duplicate vocabulary token: " + t);
      token_to_id_.emplace(t, static_cast<TokenId>(id_to_token_.size()));
      id_to_token_.push_back(std::move(t));
    }
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  int min_count_ = 1;
};

/// Induce a vocabulary. Sentinel literals are never counted.
template <typename Range>
Vocabulary build_vocab(const Range& corpus, int min_count) {
  if (min_count < 1) throw DataError("min_count must be >= 1");
  std::map<std::string, std::int64_t> freq;
  for (const auto& text : corpus)
    for (auto& t : tokenize(text))
      if (!tok::is_sentinel_text(t)) ++freq[t];
  std::vector<std::pair<std::string, std::int64_t>> items;
  for (auto& [t, c] : freq)
    if (c >= min_count) items.emplace_back(t, c);
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(items.size());
  for (auto& [t, c] : items) tokens.push_back(t);
  return Vocabulary::from_tokens(std::move(tokens), min_count);
}

inline std::vector<TokenId> encode(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& t : tokenize(text)) {
    if (t == tok::kMask1Text)
      ids.push_back(tok::kMask1);
    else if (t == tok::kMask2Text)
      ids.push_back(tok::kMask2);
    else if (t == tok::kEndText)
      ids.push_back(tok::kEnd);
    else
      ids.push_back(vocab.id(t));
  }
  return ids;
}

inline std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(ids[i]);
  }
  return out;
}

}  // namespace zett

#endif  // ZETT_TOKENIZER_HPP_
