// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace zett;

namespace {
const char* kJamContext = "Jimmy Jam is the son of Cornbread Harris, a Minneapolis blues and jazz musician.";
}

TEST_CASE("validate_template records placeholder order", "[templates]") {
  const auto a = validate_template("<head> is a participant in <tail>.");
  CHECK(a.head_first);
  CHECK(a.placeholder_order() == std::array{Role::Head, Role::Tail});
  const auto b = validate_template("<tail> wrote the script for <head>.");
  CHECK_FALSE(b.head_first);
  CHECK(b.placeholder_order() == std::array{Role::Tail, Role::Head});
}

TEST_CASE("validate_template names the offending placeholders", "[templates]") {
  try {
    validate_template("<head> likes <head>");
    FAIL("expected a validation error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("duplicate <head>") != std::string::npos);
    CHECK(msg.find("missing <tail>") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_template("no placeholders"), DataError);
  CHECK_THROWS_AS(validate_template("<head> <tail> <tail>"), DataError);
}

TEST_CASE("mask replaces the first placeholder with <X> and the second with <Y>", "[templates]") {
  const auto p = mask(validate_template("<tail> is a father of <head>", "father"), kJamContext);
  CHECK(p.masked_template == "<X> is a father of <Y>");
  CHECK(p.slot_map == std::array{Role::Tail, Role::Head});
  CHECK(p.prompt_text == std::string(kJamContext) + " <X> is a father of <Y>");

  const auto q = mask(validate_template("<head> is published by <tail>."), "c");
  CHECK(q.masked_template == "<X> is published by <Y>.");
  CHECK(q.slot_map == std::array{Role::Head, Role::Tail});
  CHECK(q == mask(validate_template("<head> is published by <tail>."), "c"));
}

TEST_CASE("fill substitutes entities", "[templates]") {
  CHECK(fill(validate_template("<head> is a participant in <tail>."), "Byron LaBeach",
             "1952 Summer Olympics") == "Byron LaBeach is a participant in 1952 Summer Olympics.");
  CHECK(fill(validate_template("<tail> is a father of <head>"), "Jimmy Jam", "Cornbread Harris") ==
        "Cornbread Harris is a father of Jimmy Jam");
  CHECK_THROWS_AS(fill(validate_template("<head> x <tail>"), " ", "b"), DataError);
}

TEST_CASE("build_target follows the slot map", "[templates]") {
  const auto p = mask(validate_template("<tail> is a father of <head>", "father"), kJamContext);
  CHECK(build_target({"Jimmy Jam", "father", "Cornbread Harris"}, p) ==
        "<X> Cornbread Harris <Y> Jimmy Jam <Z>");

  const auto u = mask(validate_template("<tail> is a participating team in <head>", "team"), "c");
  CHECK(build_target({"UEFA Euro 1972", "team", "Hungary national football team"}, u) ==
        "<X> Hungary national football team <Y> UEFA Euro 1972 <Z>");

  const auto s = mask(validate_template("<head> = <tail>", "same"), "c");
  CHECK(build_target({"A", "same", "A"}, s) == "<X> A <Y> A <Z>");
  CHECK_THROWS_AS(build_target({"A", "other", "B"}, s), DataError);
}

TEST_CASE("parse_output accepts every documented terminator", "[templates]") {
  const auto p = mask(validate_template("<tail> is a father of <head>", "father"), kJamContext);
  const auto r = parse_output("<X> Cornbread Harris <Y> Jimmy Jam <Y>", p);
  CHECK(r.head == "Jimmy Jam");
  CHECK(r.tail == "Cornbread Harris");
  CHECK(r.raw.terminator == Terminator::RepeatedMask2);

  const auto q = mask(validate_template("<head> x <tail>"), "a b");
  const auto s = parse_output("<X> a <Y> b <Z>", q);
  CHECK(s.head == "a");
  CHECK(s.tail == "b");
  CHECK(s.raw.terminator == Terminator::End);
  CHECK(parse_output("<X> a <Y> b </s>", q).raw.terminator == Terminator::EndOfSequence);
  CHECK(parse_output("<X> a <Y> b", q).raw.terminator == Terminator::EndOfSequence);
}

TEST_CASE("parse_output rejects null spans and malformed sequences", "[templates]") {
  const auto q = mask(validate_template("<head> x <tail>"), "a b");
  try {
    parse_output("<X> <Y> b", q);
    FAIL("expected a null-span error");
  } catch (const ParseError& e) {
    CHECK(e.null_span());
    CHECK(std::string(e.what()).find("span 1") != std::string::npos);
  }
  try {
    parse_output("<X> a <Y> <Z>", q);
    FAIL("expected a null-span error");
  } catch (const ParseError& e) {
    CHECK(e.null_span());
  }
  for (const char* bad : {"a <Y> b <Z>", "<X> a b <Z>", "", "<X> a <X> b <Y> c"}) {
    try {
      parse_output(bad, q);
      FAIL("expected a malformed-output error");
    } catch (const ParseError& e) {
      CHECK_FALSE(e.null_span());
    }
  }
}

TEST_CASE("template invariants hold on random patterns", "[templates][property]") {
  const std::vector<std::string> words = {"is", "the", "father", "of", "a", "member", "in", "."};
  const std::vector<std::string> ents = {"Jimmy Jam", "A", "Cornbread  Harris", "1952 Summer Olympics"};
  SplitMix64 rng(11);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> parts;
    const auto n = 1 + rng.below(4);
    for (std::uint64_t k = 0; k < n; ++k) parts.push_back(words[rng.below(words.size())]);
    const bool head_first = rng.below(2) == 0;
    const auto pos = rng.below(parts.size() + 1);
    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(pos), head_first ? "<head>" : "<tail>");
    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(pos + 1 + rng.below(parts.size() - pos)),
                 head_first ? "<tail>" : "<head>");
    const std::string pattern = join(parts);
    const auto tpl = validate_template(pattern, "r");
    const auto p = mask(tpl, "ctx");
    CHECK(p.masked_template.find("<X>") < p.masked_template.find("<Y>"));
    CHECK(p.slot_map[0] != p.slot_map[1]);

    const Triplet t{ents[rng.below(ents.size())], "r", ents[rng.below(ents.size())]};
    const auto back = parse_output(build_target(t, p), p);
    CHECK(back.head == normalize_ws(t.head));
    CHECK(back.tail == normalize_ws(t.tail));

    std::string expect = p.masked_template;
    const auto& first = p.slot_map[0] == Role::Head ? t.head : t.tail;
    const auto& second = p.slot_map[0] == Role::Head ? t.tail : t.head;
    expect.replace(expect.find("<X>"), 3, first);
    expect.replace(expect.find("<Y>"), 3, second);
    CHECK(fill(tpl, t.head, t.tail) == expect);
  }
}

TEST_CASE("swapping placeholder order swaps the parse, not the stored orientation", "[templates]") {
  const auto fwd = mask(validate_template("<head> x <tail>"), "c");
  const auto rev = mask(validate_template("<tail> x <head>"), "c");
  const auto a = parse_output("<X> p <Y> q <Z>", fwd);
  const auto b = parse_output("<X> p <Y> q <Z>", rev);
  CHECK(a.head == b.tail);
  CHECK(a.tail == b.head);
  const Triplet t{"h", "", "t"};
  CHECK(parse_output(build_target(t, rev), rev).head == "h");
}
