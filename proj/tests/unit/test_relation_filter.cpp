// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "support.hpp"

using namespace zett;
using Catch::Approx;

namespace {

// Unit vectors in the plane at a given cosine to the x axis.
nlohmann::json planar_table(const std::string& context, const std::vector<std::pair<std::string, double>>& descs) {
  nlohmann::json t = nlohmann::json::object();
  t[PrecomputedEmbedder::key(context)] = {1.0, 0.0};
  for (const auto& [text, cosine] : descs) t[PrecomputedEmbedder::key(text)] = {cosine, std::sqrt(1.0 - cosine * cosine)};
  return t;
}

std::set<double> selected_values(const std::vector<double>& sims, const FilterConfig& cfg) {
  std::set<double> out;
  for (std::size_t i : select_relations(sims, cfg)) out.insert(sims[i]);
  return out;
}

}  // namespace

TEST_CASE("hashed bag-of-words similarity basics", "[relation-filter]") {
  const HashedBowEmbedder e;
  const auto rel = testing::relation("r", "<head> r <tail>", "person employed by an organization");
  CHECK(similarity(e, "person employed by an organization", rel) == Approx(1.0));
  CHECK(similarity(e, "Person employed by an organization .", rel) == Approx(1.0));

  std::string w1 = "alpha", w2;
  for (const char* c : {"beta", "gamma", "delta", "omega"})
    if (e.bucket(c) != e.bucket(w1)) {
      w2 = c;
      break;
    }
  REQUIRE_FALSE(w2.empty());
  CHECK(similarity(e, w1, testing::relation("r", "<head> r <tail>", w2)) == 0.0);

  const auto a = e.embed("Jimmy Jam is the son of Cornbread Harris");
  const auto b = e.embed("child of a musician");
  CHECK(dot(a, b) == dot(b, a));
  CHECK(dot(a, a) == Approx(1.0));
  const auto none = e.embed(", . ;");
  CHECK(std::all_of(none.begin(), none.end(), [](double x) { return x == 0.0; }));
  CHECK_THROWS_AS(similarity(e, "x", testing::relation("r", "<head> r <tail>", " ")), DataError);
}

TEST_CASE("extreme thresholds keep everything or only the best", "[relation-filter]") {
  const std::vector<double> sims{0.2, 0.7, -0.3, 0.7, 0.1};
  CHECK(select_relations(sims, {-1.0, true}).size() == 5);
  CHECK(select_relations(sims, {-7.0, true}).size() == 5);
  CHECK(select_relations(sims, {1.0, true}) == std::vector<std::size_t>{1});
  CHECK(select_relations(sims, {1.0, false}).empty());
  CHECK(select_relations({}, {0.0, true}).empty());
}

TEST_CASE("precomputed similarities select the relations above delta", "[relation-filter]") {
  const std::string ctx = "Jimmy Jam is the son of Cornbread Harris.";
  const PrecomputedEmbedder e(planar_table(ctx, {{"father", 0.9}, {"employer", 0.5}, {"parent", 0.87}}));
  const std::vector<RelationSpec> rels = {testing::relation("P22", "<tail> is a father of <head>", "father"),
                                          testing::relation("P108", "<head> works for <tail>", "employer"),
                                          testing::relation("P8810", "<tail> is a parent of <head>", "parent")};
  const auto sims = relation_similarities(e, ctx, rels);
  CHECK(sims[0] == Approx(0.9));
  CHECK(sims[1] == Approx(0.5));
  CHECK(sims[2] == Approx(0.87));
  const auto kept = filter_relations(e, ctx, rels, {0.85, true});
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "P22");
  CHECK(kept[1].id == "P8810");
  CHECK_THROWS_AS(e.embed("unseen text"), DataError);
}

TEST_CASE("precomputed embeddings load from a file", "[relation-filter]") {
  const auto dir = testing::scratch_dir("relation_filter");
  write_file(dir + "/e.json", planar_table("c", {{"d", 0.6}}).dump());
  const auto e = PrecomputedEmbedder::load(dir + "/e.json");
  CHECK(e.dimension() == 2);
  CHECK(dot(e.embed("c"), e.embed("d")) == Approx(0.6));
  write_file(dir + "/bad.json", R"({"a": [1, 0], "b": [1]})");
  CHECK_THROWS_AS(PrecomputedEmbedder::load(dir + "/bad.json"), DataError);
}

TEST_CASE("raising delta never adds relations", "[relation-filter][property]") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sims(10);
    for (auto& s : sims) s = 2.0 * rng.uniform() - 1.0;
    std::vector<double> deltas(10);
    for (auto& d : deltas) d = 2.2 * rng.uniform() - 1.1;
    std::sort(deltas.begin(), deltas.end());
    for (bool fallback : {false, true})
      for (std::size_t i = 1; i < deltas.size(); ++i) {
        const auto lo = select_relations(sims, {deltas[i - 1], fallback});
        const auto hi = select_relations(sims, {deltas[i], fallback});
        CHECK(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
      }
  }
}

TEST_CASE("selection does not depend on relation order", "[relation-filter][property]") {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sims(8);
    for (auto& s : sims) s = 2.0 * rng.uniform() - 1.0;
    const FilterConfig cfg{2.0 * rng.uniform() - 1.0, true};
    const auto before = selected_values(sims, cfg);
    auto shuffled = sims;
    shuffle(shuffled, rng);
    CHECK(selected_values(shuffled, cfg) == before);
  }
}

TEST_CASE("calibrate_delta picks the first best grid value", "[relation-filter]") {
  const std::string ctx = "a b";
  const PrecomputedEmbedder emb(planar_table(ctx, {{"first", 0.5}, {"second", 0.9}}));
  const auto v = build_vocab(std::vector<std::string>{"a b x y"}, 1);
  const testing::TargetBackend backend(v.size(), encode("<X> a <Y> b <Z>", v));
  const Extractor ex(backend, v, emb);
  const std::vector<RelationSpec> pool = {testing::relation("r1", "<head> x <tail>", "first"),
                                          testing::relation("r2", "<head> y <tail>", "second")};
  Dataset val;
  val.relations = RelationRegistry(pool);
  val.examples = {testing::example("v1", ctx, {{"a", "r2", "b"}})};

  PredictionConfig cfg;
  const auto r = calibrate_delta(ex, val, pool, {0.95, 0.0, 0.6, 0.4}, cfg);
  CHECK(r.grid == std::vector<double>{0.0, 0.4, 0.6, 0.95});
  CHECK(r.metric == std::vector<double>{0.0, 0.0, 1.0, 1.0});
  CHECK(r.best == 0.6);

  CHECK(calibrate_delta(ex, val, pool, {0.3}, cfg).best == 0.3);

  val.examples = {testing::example("v1", ctx, {{"a", "r3", "b"}})};
  const auto tie = calibrate_delta(ex, val, pool, {0.5, 0.2, 0.8}, cfg);
  CHECK(tie.best == 0.2);
  CHECK_THROWS_AS(calibrate_delta(ex, val, pool, {}, cfg), DataError);
}
