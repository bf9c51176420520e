// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_TEMPLATES_HPP_
#define ZETT_TEMPLATES_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zett/tokenizer.hpp"
#include "zett/types.hpp"

namespace zett {

inline constexpr std::string_view kHeadPlaceholder = "<head>";
inline constexpr std::string_view kTailPlaceholder = "<tail>";

enum class Role { Head, Tail };

/// A relation pattern with exactly one `<head>` and one `<tail>`.
struct Template {
  std::string relation;
  std::string pattern;
  /// True when `<head>` precedes `<tail>` in the pattern.
  bool head_first = true;

  /// Role bound to MASK1 and MASK2, in that order.
  std::array<Role, 2> placeholder_order() const noexcept {
    return head_first ? std::array{Role::Head, Role::Tail} : std::array{Role::Tail, Role::Head};
  }

  friend bool operator==(const Template&, const Template&) = default;
};

namespace detail {
inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t p = text.find(needle); p != std::string_view::npos;
       p = text.find(needle, p + needle.size()))
    ++n;
  return n;
}

inline std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  const std::size_t p = s.find(from);
  if (p != std::string::npos) s.replace(p, from.size(), to);
  return s;
}
}  // namespace detail

inline Template validate_template(std::string_view pattern, std::string relation = {}) {
  const std::size_t heads = detail::count_occurrences(pattern, kHeadPlaceholder);
  const std::size_t tails = detail::count_occurrences(pattern, kTailPlaceholder);
  if (heads != 1 || tails != 1) {
    std::vector<std::string> problems;
    if (heads == 0) problems.emplace_back("missing <head>");
    if (heads > 1) problems.emplace_back("duplicate <head>");
    if (tails == 0) problems.emplace_back("missing <tail>");
    if (tails > 1) problems.emplace_back("duplicate <tail>");
    throw DataError("invalid template \"" + std::string(pattern) + "\": " + join(problems, ", "));
  }
  Template t;
  t.relation = std::move(relation);
  t.pattern = std::string(pattern);
  t.head_first = pattern.find(kHeadPlaceholder) < pattern.find(kTailPlaceholder);
  return t;
}

/// Model input: context, one space, the template with its first placeholder
/// replaced by `<X>` and its second by `<Y>`.
struct MaskedPrompt {
  std::string relation;
  std::string context;
  std::string masked_template;
  std::string prompt_text;
  /// slot_map[0] is the role filled by MASK1, slot_map[1] by MASK2.
  std::array<Role, 2> slot_map{Role::Head, Role::Tail};

  friend bool operator==(const MaskedPrompt&, const MaskedPrompt&) = default;
};

inline MaskedPrompt mask(const Template& tpl, std::string_view context) {
  MaskedPrompt p;
  p.relation = tpl.relation;
  p.context = std::string(context);
  p.slot_map = tpl.placeholder_order();
  const auto first = tpl.head_first ? kHeadPlaceholder : kTailPlaceholder;
  const auto second = tpl.head_first ? kTailPlaceholder : kHeadPlaceholder;
  p.masked_template = detail::replace_once(
      detail::replace_once(tpl.pattern, first, tok::kMask1Text), second, tok::kMask2Text);
  p.prompt_text = p.context + " " + p.masked_template;
  return p;
}

inline std::string fill(const Template& tpl, std::string_view head, std::string_view tail) {
  if (normalize_ws(head).empty() || normalize_ws(tail).empty())
    throw DataError("fill: empty entity");
  return detail::replace_once(detail::replace_once(tpl.pattern, kHeadPlaceholder, head),
                              kTailPlaceholder, tail);
}

/// "<X> s1 <Y> s2 <Z>" with s1/s2 chosen through the slot map.
inline std::string build_target(const Triplet& triplet, const MaskedPrompt& prompt) {
  if (!prompt.relation.empty() && triplet.relation != prompt.relation)
    throw DataError("build_target: triplet relation '" + triplet.relation +
                    "' does not match template relation '" + prompt.relation + "'");
  const auto pick = [&](Role r) -> const std::string& {
    return r == Role::Head ? triplet.head : triplet.tail;
  };
  return std::string(tok::kMask1Text) + " " + normalize_ws(pick(prompt.slot_map[0])) + " " +
         std::string(tok::kMask2Text) + " " + normalize_ws(pick(prompt.slot_map[1])) + " " +
         std::string(tok::kEndText);
}

enum class Terminator { End, EndOfSequence, RepeatedMask2 };

struct InfilledOutput {
  std::string span1;
  std::string span2;
  Terminator terminator = Terminator::End;
};

/// Thrown by parse_output. `null_span` distinguishes an empty span (a
/// discarded candidate) from a structurally malformed sequence.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, bool null_span) : DataError(what), null_span_(null_span) {}
  bool null_span() const noexcept { return null_span_; }

 private:
  bool null_span_;
};

struct ParsedPair {
  std::string head;
  std::string tail;
  InfilledOutput raw;
};

/// Parse decoded tokens (text form). Tokens after the terminator are ignored.
inline ParsedPair parse_output(std::span<const std::string> decoded, const MaskedPrompt& prompt) {
  if (decoded.empty() || decoded[0] != tok::kMask1Text)
    throw ParseError("malformed output: does not begin with <X>", false);
  std::size_t i = 1;
  std::vector<std::string> s1, s2;
  for (; i < decoded.size() && decoded[i] != tok::kMask2Text; ++i) {
    if (decoded[i] == tok::kMask1Text || decoded[i] == tok::kEndText ||
        decoded[i] == tok::kReservedText[tok::kEos])
      throw ParseError("malformed output: <Y> missing", false);
    s1.push_back(decoded[i]);
  }
  if (i == decoded.size()) throw ParseError("malformed output: <Y> missing", false);
  ++i;
  InfilledOutput out;
  out.terminator = Terminator::EndOfSequence;
  for (; i < decoded.size(); ++i) {
    const std::string& t = decoded[i];
    if (t == tok::kEndText) {
      out.terminator = Terminator::End;
      break;
    }
    if (t == tok::kMask2Text) {
      out.terminator = Terminator::RepeatedMask2;
      break;
    }
    if (t == tok::kReservedText[tok::kEos] || t == tok::kReservedText[tok::kPad]) break;
    if (t == tok::kMask1Text) throw ParseError("malformed output: stray <X>", false);
    s2.push_back(t);
  }
  if (s1.empty()) throw ParseError("null string in span 1", true);
  if (s2.empty()) throw ParseError("null string in span 2", true);
  out.span1 = join(s1);
  out.span2 = join(s2);
  ParsedPair p;
  p.head = prompt.slot_map[0] == Role::Head ? out.span1 : out.span2;
  p.tail = prompt.slot_map[0] == Role::Head ? out.span2 : out.span1;
  p.raw = std::move(out);
  return p;
}

inline ParsedPair parse_output(std::string_view decoded, const MaskedPrompt& prompt) {
  const auto toks = tokenize(decoded);
  return parse_output(std::span<const std::string>(toks), prompt);
}

inline ParsedPair parse_output(std::span<const TokenId> ids, const Vocabulary& vocab,
                               const MaskedPrompt& prompt) {
  std::vector<std::string> toks;
  toks.reserve(ids.size());
  for (TokenId id : ids) toks.push_back(vocab.token(id));
  return parse_output(std::span<const std::string>(toks), prompt);
}

}  // namespace zett

#endif  // ZETT_TEMPLATES_HPP_
