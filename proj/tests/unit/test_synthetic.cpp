// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "support.hpp"

using namespace zett;

TEST_CASE("generation is deterministic in the seed", "[synthetic]") {
  SyntheticConfig cfg;
  const auto a = serialize_dataset(generate(cfg));
  CHECK(a == serialize_dataset(generate(cfg)));
  cfg.seed = 1;
  CHECK(a != serialize_dataset(generate(cfg)));
  CHECK(make_grammar(20, 0).registry() == make_grammar(20, 0).registry());
}

TEST_CASE("default generation yields 1000 single and 250 two-triplet rows", "[synthetic]") {
  const auto ds = generate(SyntheticConfig{});
  CHECK(singles_of(ds).size() == 1000);
  CHECK(multis_of(ds).size() == 250);
  CHECK(ds.relations.size() == 20);
  CHECK(ds.examples.front().id == "syn-00000");
  std::set<std::string> ids;
  for (const auto& e : ds.examples) ids.insert(e.id);
  CHECK(ids.size() == ds.size());
  SyntheticConfig none;
  none.multi_fraction = 0.0;
  CHECK(multis_of(generate(none)).empty());
}

TEST_CASE("rows are well formed and reload through the dataset loader", "[synthetic]") {
  const auto g = make_grammar();
  const auto ds = generate(g, SyntheticConfig{});
  for (const auto& e : ds.examples)
    for (const auto& t : e.triplets) {
      CHECK(e.context.find(t.head) != std::string::npos);
      CHECK(e.context.find(t.tail) != std::string::npos);
      CHECK(ds.relations.contains(t.relation));
    }
  const auto back = parse_dataset(serialize_dataset(ds), ds.relations);
  CHECK(back.examples == ds.examples);
  for (const auto& e : back.examples) CHECK_FALSE(e.entity_not_in_context);
}

TEST_CASE("each relation has a unique phrase present in its templates", "[synthetic]") {
  const auto g = make_grammar();
  std::set<std::string> phrases;
  for (const auto& r : g.relations) {
    phrases.insert(r.phrase_text());
    REQUIRE(r.templates().size() == 2);
    CHECK(r.templates().front() == r.pattern());
    for (const auto& t : r.templates()) {
      CHECK(t.find(r.phrase_text()) != std::string::npos);
      CHECK_NOTHROW(validate_template(t));
    }
  }
  CHECK(phrases.size() == g.relations.size());
  CHECK_THROWS_AS(make_grammar(1), DataError);
  CHECK_THROWS_AS(make_grammar(49), DataError);
}

TEST_CASE("the copy oracle reads every row correctly", "[synthetic]") {
  const auto g = make_grammar();
  const auto ds = generate(g, SyntheticConfig{});
  for (const auto& e : ds.examples) {
    const auto o = copy_oracle(g, e.context);
    REQUIRE(o.size() == e.triplets.size());
    const std::set<Triplet> got(o.begin(), o.end()), want(e.triplets.begin(), e.triplets.end());
    CHECK(got == want);
  }
}

TEST_CASE("label noise swaps relations at roughly the requested rate", "[synthetic]") {
  const auto g = make_grammar();
  SyntheticConfig cfg;
  cfg.noise_fraction = 0.3;
  cfg.multi_fraction = 0.0;
  const auto ds = generate(g, cfg);
  std::size_t wrong = 0;
  for (const auto& e : ds.examples) wrong += copy_oracle(g, e.context).front().relation != e.triplets[0].relation;
  CHECK(wrong > 200);
  CHECK(wrong < 400);
}

TEST_CASE("leak scan flags held-out phrases in training rows", "[synthetic]") {
  const auto g = make_grammar();
  const auto ds = generate(g, SyntheticConfig{});
  const auto fold = split_folds(ds.relations.ids(), 5, 5, 0);
  CHECK(fold.train.size() == 10);
  const std::set<std::string> train(fold.train.begin(), fold.train.end());
  std::vector<std::string> held = fold.test;
  held.insert(held.end(), fold.validation.begin(), fold.validation.end());
  CHECK(leak_scan(g, project_strict(ds, train), held).empty());
  const auto leaks = leak_scan(g, ds, held);
  CHECK_FALSE(leaks.empty());
  CHECK(leak_scan(g, project(ds, train), held).size() > 0);
}

TEST_CASE("a tiny benchmark seed runs end to end", "[synthetic]") {
  BenchmarkConfig cfg;
  cfg.data.num_relations = 6;
  cfg.data.n_per_relation = 6;
  cfg.m = 2;
  cfg.v = 2;
  cfg.model.d_model = 16;
  cfg.model.heads = 2;
  cfg.model.encoder_layers = 1;
  cfg.model.decoder_layers = 1;
  cfg.model.ffn_dim = 16;
  cfg.train.epochs = 1;
  cfg.delta_grid = {0.0, 0.5};
  cfg.threshold_grid = {-20.0, -5.0};
  cfg.seeds = {0};
  const auto r = run_benchmark(cfg);
  REQUIRE(r.seeds.size() == 1);
  const auto& s = r.seeds[0];
  CHECK(s.leaks == 0);
  CHECK(s.train_steps > 0);
  CHECK(s.ablation_rows.size() == 4);
  CHECK(s.oracle_accuracy == 1.0);
  CHECK((s.unseen_accuracy >= 0.0 && s.unseen_accuracy <= 1.0));
  CHECK(s.predictions.size() == 12);
  const auto j = r.to_json();
  CHECK(j.at("seeds").size() == 1);
  CHECK(j.at("report").at("metrics").contains("unseen_accuracy"));
}
