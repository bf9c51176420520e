// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "support.hpp"

using namespace zett;
using Catch::Approx;
using testing::example;
using testing::prediction;

namespace {

Dataset single_gold(std::size_t n) {
  Dataset d;
  d.relations = RelationRegistry({testing::relation("r", "<head> r <tail>"), testing::relation("s", "<head> s <tail>")});
  for (std::size_t i = 0; i < n; ++i)
    d.examples.push_back(example("e" + std::to_string(i), "h" + std::to_string(i) + " r t",
                                 {{"h" + std::to_string(i), "r", "t"}}));
  return d;
}

std::vector<ExamplePrediction> top1(const Dataset& d, const std::vector<bool>& correct) {
  std::vector<ExamplePrediction> p;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& g = d.examples[i].triplets[0];
    p.push_back(prediction(d.examples[i].id, {{correct[i] ? g : Triplet{g.head, "s", g.tail}, -1.0}}));
  }
  return p;
}

std::vector<AnnotationRecord> labeled(std::size_t tt, std::size_t tf, std::size_t ft, std::size_t ff) {
  std::vector<AnnotationRecord> out;
  const auto add = [&](std::size_t n, bool a, bool b) {
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({"x" + std::to_string(out.size()), 1, {"h", "r", "t"}, -1.0, a, b});
  };
  add(tt, true, true);
  add(tf, true, false);
  add(ft, false, true);
  add(ff, false, false);
  return out;
}

}  // namespace

TEST_CASE("single-triplet accuracy", "[evaluation]") {
  const auto d4 = single_gold(4);
  CHECK(eval_single(d4, top1(d4, {true, true, true, true})) == 1.0);
  const auto d5 = single_gold(5);
  CHECK(eval_single(d5, top1(d5, {true, false, true, false, false})) == Approx(0.4));

  std::vector<ExamplePrediction> flipped;
  for (const auto& e : d4.examples)
    flipped.push_back(prediction(e.id, {{{e.triplets[0].tail, "r", e.triplets[0].head}, -1.0}}));
  CHECK(eval_single(d4, flipped) == 0.0);

  auto partial = top1(d4, {true, true, true, true});
  partial.pop_back();
  CHECK(eval_single(d4, partial) == Approx(0.75));
  partial[0].ranked.clear();
  CHECK(eval_single(d4, partial) == Approx(0.5));

  Dataset multi = d4;
  multi.examples[0].triplets.push_back({"a", "r", "b"});
  CHECK_THROWS_AS(eval_single(multi, top1(d4, {true, true, true, true})), DataError);
  CHECK(eval_single(Dataset{}, {}) == 0.0);
}

TEST_CASE("multi-triplet precision, recall and F1", "[evaluation]") {
  Dataset g;
  g.examples = {example("m", "ctx", {{"a", "r", "b"}, {"c", "r", "d"}, {"e", "s", "f"}})};
  const auto two_of_three = eval_multi(g, {prediction("m", {{{"a", "r", "b"}, -1}, {{"c", "r", "d"}, -2}, {{"x", "r", "y"}, -3}})});
  CHECK(two_of_three.precision == Approx(2.0 / 3.0));
  CHECK(two_of_three.recall == Approx(2.0 / 3.0));
  CHECK(two_of_three.f1 == Approx(2.0 / 3.0));

  const auto exact = eval_multi(g, {prediction("m", {{{"a", "r", "b"}, -1}, {{"c", "r", "d"}, -1}, {{"e", "s", "f"}, -1}})});
  CHECK(exact.f1 == 1.0);
  const auto empty = eval_multi(g, {prediction("m", {})});
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);

  const auto macro = eval_multi(g, {prediction("m", {{{"a", "r", "b"}, -1}, {{"e", "s", "f"}, -1}})}, true);
  CHECK(macro.precision == Approx(1.0));
  CHECK(macro.recall == Approx((0.5 + 1.0) / 2.0));
  CHECK(macro.f1 == Approx((2.0 / 3.0 + 1.0) / 2.0));
}

TEST_CASE("micro F1 matches a brute-force recount", "[evaluation][property]") {
  SplitMix64 rng(17);
  const auto random_triplet = [&] {
    return Triplet{"h" + std::to_string(rng.below(3)), "r" + std::to_string(rng.below(2)), "t" + std::to_string(rng.below(3))};
  };
  for (int trial = 0; trial < 50; ++trial) {
    Dataset g;
    std::vector<ExamplePrediction> preds;
    for (int i = 0; i < 6; ++i) {
      std::vector<Triplet> gold;
      for (std::uint64_t k = 0, n = 1 + rng.below(4); k < n; ++k) gold.push_back(random_triplet());
      std::vector<std::pair<Triplet, double>> pred;
      for (std::uint64_t k = 0, n = rng.below(5); k < n; ++k) pred.push_back({random_triplet(), -1.0});
      g.examples.push_back(example("e" + std::to_string(i), "c", gold));
      preds.push_back(prediction("e" + std::to_string(i), pred));
    }
    double tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<Triplet> gu, pu;
      for (const auto& t : g.examples[i].triplets)
        if (std::find(gu.begin(), gu.end(), t) == gu.end()) gu.push_back(t);
      for (const auto& c : preds[i].ranked)
        if (std::find(pu.begin(), pu.end(), c.triplet) == pu.end()) pu.push_back(c.triplet);
      for (const auto& t : pu) tp += std::find(gu.begin(), gu.end(), t) != gu.end();
      np += static_cast<double>(pu.size());
      ng += static_cast<double>(gu.size());
    }
    const double p = np ? tp / np : 0.0, r = ng ? tp / ng : 0.0;
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const auto got = eval_multi(g, preds);
    CHECK(got.precision == Approx(p).margin(1e-12));
    CHECK(got.recall == Approx(r).margin(1e-12));
    CHECK(got.f1 == Approx(f1).margin(1e-12));
  }
}

TEST_CASE("entity extraction needs both entities", "[evaluation]") {
  Dataset g;
  g.relations = RelationRegistry({testing::relation("r", "<head> r <tail>")});
  g.examples = {example("e1", "a b c", {{"a", "r", "c"}}), example("e2", "a b c", {{"a", "r", "b"}})};
  const auto v = build_vocab(std::vector<std::string>{"a b c r"}, 1);
  const testing::TargetBackend b(v.size(), encode("<X> a <Y> c <Z>", v));
  const HashedBowEmbedder emb;
  const Extractor ex(b, v, emb);
  CHECK(eval_entity(g, ex, DecodeConfig{}) == Approx(0.5));
}

TEST_CASE("majority baseline and summary statistics", "[evaluation]") {
  Dataset g;
  g.examples = {example("1", "c", {{"a", "r", "b"}}), example("2", "c", {{"a", "r", "b"}}),
                example("3", "c", {{"a", "s", "b"}}), example("4", "c", {{"a", "s", "b"}, {"a", "r", "b"}})};
  CHECK(majority_baseline(g) == Approx(2.0 / 3.0));
  CHECK(majority_baseline(Dataset{}) == 0.0);
  CHECK(mean_of({1.0, 2.0, 6.0}) == Approx(3.0));
  CHECK(stddev_of({1.0, 2.0, 6.0}) == Approx(std::sqrt(7.0)));
  CHECK(stddev_of({4.0}) == 0.0);

  MetricReport rep;
  rep.mode = "single";
  rep.add("fold0", {{"accuracy", 0.5}});
  rep.add("fold1", {{"accuracy", 0.7}});
  rep.add("fold2", {{"accuracy", 0.9}});
  CHECK(rep.mean("accuracy") == Approx(0.7));
  CHECK(rep.stddev("accuracy") == Approx(0.2));
  const auto j = rep.to_json();
  CHECK(j.at("folds").size() == 3);
  CHECK(j.at("metrics").at("accuracy").at("mean").get<double>() == Approx(0.7));
}

TEST_CASE("ablations switch off one setting each", "[evaluation]") {
  PredictionConfig base;
  base.filter.delta = 0.4;
  CHECK(ablated_config(base, "no-vocab-constraint").decode.vocab_constraint == false);
  CHECK(ablated_config(base, "greedy").decode.effective_beam() == 1);
  CHECK(ablated_config(base, "no-filter").filter.delta == -1.0);
  CHECK(ablated_config(base, "full").filter.delta == 0.4);
  CHECK_THROWS_AS(ablated_config(base, "no-such"), UsageError);

  const auto d = single_gold(3);
  const auto v = build_vocab(std::vector<std::string>{"h0 h1 h2 r s t"}, 1);
  const testing::HashBackend b(v.size(), 4);
  const HashedBowEmbedder emb;
  const Extractor ex(b, v, emb);
  const auto rows = run_ablations(ex, d, d.relations.specs(), base);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rows[i].name == kAblationNames[i]);
  for (const auto& r : rows) CHECK((r.accuracy >= 0.0 && r.accuracy <= 1.0));
  CHECK(ablation_table_json(rows).size() == 4);
}

TEST_CASE("human-eval export samples contexts and their top five", "[evaluation]") {
  std::vector<ExamplePrediction> preds;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::pair<Triplet, double>> ranked;
    const int n = i % 50 == 0 ? 3 : 6;
    for (int k = 0; k < n; ++k) ranked.push_back({{"h" + std::to_string(k), "r", "t"}, -1.0 - k});
    char id[16];
    std::snprintf(id, sizeof id, "c%03d", i);
    preds.push_back(prediction(id, ranked));
  }
  std::vector<ExamplePrediction> full;
  for (const auto& p : preds)
    if (p.ranked.size() >= 5) full.push_back(p);
  const auto ex = export_human_eval(full, 5, 200, 0);
  CHECK(ex.records.size() == 1000);
  CHECK(ex.short_contexts.empty());
  std::set<std::string> ids;
  for (const auto& r : ex.records) {
    ids.insert(r.example_id);
    CHECK((r.rank >= 1 && r.rank <= 5));
    CHECK_FALSE(r.annotator1.has_value());
  }
  CHECK(ids.size() == 200);
  CHECK(std::is_sorted(ex.records.begin(), ex.records.end(),
                       [](const auto& a, const auto& b) { return std::tie(a.example_id, a.rank) < std::tie(b.example_id, b.rank); }));
  CHECK(export_human_eval(full, 5, 200, 0).records == ex.records);
  CHECK(export_human_eval(full, 5, 200, 1).records != ex.records);

  const auto all = export_human_eval(preds, 5, 1000, 0);
  CHECK(all.short_contexts.size() == 6);
  CHECK(all.records.size() == 294 * 5 + 6 * 3);
  CHECK_THROWS_AS(export_human_eval(preds, 6), DataError);
  CHECK_THROWS_AS(export_human_eval(preds, 0), DataError);
}

TEST_CASE("Cohen's kappa", "[evaluation]") {
  const auto recs = labeled(80, 5, 5, 10);
  const double po = 0.9, pa = 0.85, pb = 0.85;
  const double pe = pa * pb + (1 - pa) * (1 - pb);
  CHECK(cohen_kappa(recs) == Approx((po - pe) / (1 - pe)).margin(1e-12));
  CHECK(cohen_kappa(recs) == Approx(0.6078).margin(1e-4));
  CHECK(cohen_kappa(labeled(7, 0, 0, 3)) == 1.0);
  CHECK(cohen_kappa(labeled(5, 0, 0, 0)) == 1.0);
  CHECK(cohen_kappa(labeled(0, 4, 4, 0)) == Approx(-1.0));
  CHECK_THROWS_AS(cohen_kappa(std::vector<std::pair<bool, bool>>{}), DataError);
  auto partial = recs;
  partial[0].annotator2.reset();
  CHECK_THROWS_AS(cohen_kappa(partial), DataError);
}

TEST_CASE("kappa stays within [-1, 1]", "[evaluation][property]") {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<bool, bool>> l(1 + rng.below(30));
    for (auto& [a, b] : l) {
      a = rng.below(2) == 1;
      b = rng.below(2) == 1;
    }
    try {
      const double k = cohen_kappa(l);
      CHECK((k >= -1.0 - 1e-12 && k <= 1.0 + 1e-12));
    } catch (const DataError&) {
      // all labels identical on one side with disagreement: undefined
    }
  }
}

TEST_CASE("annotations correct accuracy only when both annotators agree", "[evaluation]") {
  const auto d = single_gold(10);
  auto preds = top1(d, {true, true, false, false, false, false, false, false, false, false});
  std::vector<AnnotationRecord> recs;
  for (std::size_t i = 0; i < 10; ++i) {
    AnnotationRecord r{d.examples[i].id, 1, preds[i].ranked[0].triplet, -1.0, false, false};
    if (i == 2) r.annotator1 = r.annotator2 = true;
    if (i == 3) r.annotator1 = true;
    recs.push_back(r);
  }
  const auto res = rescore_with_annotations(d, preds, recs);
  CHECK(res.contexts == 10);
  CHECK(res.original == Approx(0.2));
  CHECK(res.corrected == Approx(0.3));

  recs[4].annotator2.reset();
  CHECK(rescore_with_annotations(d, preds, recs).unlabeled == 1);
}

TEST_CASE("rescoring never lowers accuracy", "[evaluation][property]") {
  SplitMix64 rng(6);
  const auto d = single_gold(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<bool> ok;
    for (int i = 0; i < 12; ++i) ok.push_back(rng.below(2) == 1);
    const auto preds = top1(d, ok);
    std::vector<AnnotationRecord> recs;
    for (std::size_t i = 0; i < 12; ++i)
      if (rng.below(3) != 0)
        recs.push_back({d.examples[i].id, 1, preds[i].ranked[0].triplet, -1.0, rng.below(2) == 1, rng.below(2) == 1});
    const auto r = rescore_with_annotations(d, preds, recs);
    CHECK(r.corrected >= r.original);
  }
}

TEST_CASE("annotation CSV round-trips awkward text", "[evaluation]") {
  const auto dir = testing::scratch_dir("evaluation_csv");
  const std::vector<AnnotationRecord> recs = {
      {"e,1", 1, {"Smith, John", "said \"hi\"", "line\nbreak"}, -2.5, true, std::nullopt},
      {"e2", 5, {"a", "r", "b"}, -0.125, std::nullopt, false}};
  save_annotations(recs, dir + "/a.csv");
  CHECK(load_annotations(dir + "/a.csv") == recs);
  CHECK(read_file(dir + "/a.csv").rfind(std::string(kAnnotationHeader), 0) == 0);

  CHECK_THROWS_AS(parse_annotations("wrong,header\n"), DataError);
  CHECK_THROWS_AS(parse_annotations(std::string(kAnnotationHeader) + "\ne,1,a,r,b,-1,maybe,\n"), DataError);
  CHECK_THROWS_AS(parse_annotations(std::string(kAnnotationHeader) + "\ne,9,a,r,b,-1,,\n"), DataError);
  CHECK_THROWS_AS(parse_annotations(std::string(kAnnotationHeader) + "\n\"open,1,a\n"), DataError);
}
