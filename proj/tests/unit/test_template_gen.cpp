// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "support.hpp"

using namespace zett;
using Catch::Approx;

namespace {

Dataset employer_corpus() {
  Dataset ds;
  ds.relations = RelationRegistry({testing::relation("employer", "<head> works for <tail>")});
  ds.examples = {
      testing::example("m1", "Alice works for Acme .", {{"Alice", "employer", "Acme"}}),
      testing::example("m2", "Bob works for Initech .", {{"Bob", "employer", "Initech"}}),
      testing::example("m3", "Globex hired Carol last year .", {{"Carol", "employer", "Globex"}}),
      testing::example("m4", "Dave Umbrella", {{"Dave", "employer", "Umbrella"}}),
      testing::example("m5", "Erin joined a firm .", {{"Erin", "employer", "Hooli"}}),
      testing::example("m6", "Frank is employed at Vandelay .", {{"Frank", "employer", "Vandelay"}})};
  return ds;
}

}  // namespace

TEST_CASE("mining takes the words between the entities", "[template-gen]") {
  const auto r = mine_templates(employer_corpus(), "employer", 10);
  REQUIRE(r.candidates.size() == 3);
  CHECK(r.candidates[0].pattern == "<head> works for <tail>");
  CHECK(r.candidates[0].support == 2);
  CHECK(r.candidates[0].source == TemplateSource::Mined);
  CHECK(r.candidates[1].pattern == "<head> is employed at <tail>");
  CHECK(r.candidates[2].pattern == "<tail> hired <head>");
  CHECK(r.skipped == std::vector<std::string>{"m5"});
  CHECK(mine_templates(employer_corpus(), "employer", 1).candidates.size() == 1);
  CHECK(mine_templates(employer_corpus(), "other", 3).candidates.empty());
}

TEST_CASE("mined patterns always validate", "[template-gen][property]") {
  const std::vector<std::string> words = {"Ann", "Bo", "met", "the", "of", ",", "at", "Cy"};
  SplitMix64 rng(4);
  Dataset ds;
  ds.relations = RelationRegistry({testing::relation("r", "<head> r <tail>")});
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> ctx;
    for (std::uint64_t k = 0, n = 2 + rng.below(6); k < n; ++k) ctx.push_back(words[rng.below(words.size())]);
    ds.examples.push_back(testing::example("e" + std::to_string(i), join(ctx),
                                           {{ctx[rng.below(ctx.size())], "r", ctx[rng.below(ctx.size())]}}));
  }
  for (const auto& c : mine_templates(ds, "r", 1000).candidates) {
    CHECK_NOTHROW(validate_template(c.pattern));
    CHECK(c.support >= 1);
  }
}

TEST_CASE("top-1 paraphrase selection picks the most frequent valid pattern", "[template-gen]") {
  std::vector<std::string> cands;
  for (int i = 0; i < 19; ++i) cands.push_back("<head> was hired by <tail>");
  for (int i = 0; i < 30; ++i) cands.push_back("<head> works for <tail>");
  cands.push_back("<head> works for <head>");
  cands.push_back("no placeholders here");
  CHECK(select_paraphrase(cands, ParaphrasePolicy::Top1) == "<head> works for <tail>");
  CHECK(select_paraphrase({"<tail>  of  <head>"}, ParaphrasePolicy::Top1) == "<tail> of <head>");
  CHECK(select_paraphrase({"b <head> <tail>", "a <head> <tail>"}, ParaphrasePolicy::Top1) == "a <head> <tail>");
  CHECK_THROWS_AS(select_paraphrase({"<head> only"}, ParaphrasePolicy::Top1), DataError);
  CHECK(valid_patterns(cands).size() == 49);
}

TEST_CASE("random paraphrase selection is a seeded uniform draw", "[template-gen]") {
  const std::vector<std::string> cands = {"<head> c <tail>", "<head> a <tail>", "<head> b <tail>", "<head> a <tail>",
                                          "bad"};
  const std::vector<std::string> distinct = {"<head> a <tail>", "<head> b <tail>", "<head> c <tail>"};
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto pick = select_paraphrase(cands, ParaphrasePolicy::Random, seed);
    CHECK(pick == select_paraphrase(cands, ParaphrasePolicy::Random, seed));
    auto rng = SplitMix64::substream(seed, "paraphrase-select");
    CHECK(pick == distinct[rng.below(distinct.size())]);
    seen.insert(pick);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("the rule paraphraser fills the requested count", "[template-gen]") {
  const RuleParaphraser para;
  const auto out = para.paraphrase("<head> is a member of <tail>", 49);
  CHECK(out.size() == 49);
  CHECK(out.front() == "<head> is a member of <tail>");
  const auto v = para.variants("<head> is a member of <tail>");
  CHECK(std::find(v.begin(), v.end(), "<head> was a member of <tail>") != v.end());
  CHECK(std::find(v.begin(), v.end(), "<head> is a part of <tail>") != v.end());
  CHECK(std::find(v.begin(), v.end(), "<head> is member of <tail>") != v.end());
  CHECK(valid_patterns(v).size() == v.size());
  CHECK(select_paraphrase(out, ParaphrasePolicy::Top1) == "<head> is a member of <tail>");
}

TEST_CASE("template maps round-trip", "[template-gen]") {
  const auto dir = testing::scratch_dir("template_gen");
  const std::map<std::string, std::vector<std::string>> m = {{"P1", {"<head> a <tail>"}}, {"P2", {}}};
  write_file(dir + "/t.json", template_map_json(m).dump());
  CHECK(load_template_map(dir + "/t.json") == m);
  write_file(dir + "/bad.json", "[1, 2]");
  CHECK_THROWS_AS(load_template_map(dir + "/bad.json"), DataError);
}

TEST_CASE("autogen decodes, validates and ranks relation phrases", "[template-gen]") {
  Dataset ds;
  ds.relations = RelationRegistry({testing::relation("employer", "<head> works for <tail>")});
  ds.examples = {testing::example("a1", "Alice works for Acme .", {{"Alice", "employer", "Acme"}}),
                 testing::example("a2", "Bob works for Initech .", {{"Bob", "employer", "Initech"}})};
  const auto v = build_vocab(std::vector<std::string>{"Alice works for Acme . Bob Initech"}, 1);
  const testing::TargetBackend b(v.size(), encode("<X> works for <Z>", v), 0.7);
  AutogenConfig cfg;
  cfg.beam_size = 3;
  cfg.top_k = 100;
  const auto out = autogen_templates(b, v, ds, "employer", cfg);
  REQUIRE(out.size() >= 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK_NOTHROW(validate_template(out[i].pattern));
    CHECK(out[i].source == TemplateSource::Autogen);
    if (i > 0) CHECK(out[i - 1].lm_score >= out[i].lm_score);

    double total = 0.0;
    for (const auto& e : ds.examples) {
      const auto prompt = mask(validate_template(out[i].pattern, "employer"), e.context);
      const auto input = prompt_input_ids(prompt, v, 1000);
      const auto& t = e.triplets[0];
      const auto first = prompt.slot_map[0] == Role::Head ? t.head : t.tail;
      const auto second = prompt.slot_map[0] == Role::Head ? t.tail : t.head;
      const auto target = encode("<X> " + first + " <Y> " + second + " <Z>", v);
      for (std::size_t k = 0; k < target.size(); ++k)
        total += b.next_token_logprobs(input, std::span<const TokenId>(target).first(k))[static_cast<std::size_t>(target[k])];
    }
    CHECK(out[i].lm_score == Approx(total / 2.0).margin(1e-9));
  }
  std::set<std::string> patterns;
  for (const auto& c : out) patterns.insert(c.pattern);
  CHECK(patterns.count("<head> works for <tail> .") == 1);
  CHECK(patterns.count("<tail> works for <head> .") == 1);

  cfg.top_k = 1;
  CHECK(autogen_templates(b, v, ds, "employer", cfg).size() == 1);
  CHECK_THROWS_AS(autogen_templates(b, v, ds, "missing", cfg), DataError);
  CHECK(candidates_json(out).size() == out.size());
}
