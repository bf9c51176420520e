// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_SYNTHETIC_HPP_
#define ZETT_SYNTHETIC_HPP_

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "zett/evaluation.hpp"
#include "zett/prepare.hpp"
#include "zett/seq2seq.hpp"
#include "zett/train.hpp"

namespace zett {

/// Toy language for zero-shot checks. Each relation owns a two-word verb
/// phrase built from shared modifier and verb pools, so every word is seen in
/// training while each phrase stays unique to its relation. Heads are person
/// names, tails organization names; the two pools are disjoint.
struct SyntheticRelation {
  std::string id;
  std::vector<std::string> phrase;
  bool passive_template = false;

  std::string phrase_text() const { return join(phrase); }
  std::string active_pattern() const { return "<head> " + phrase_text() + " <tail> ."; }
  std::string passive_pattern() const { return "<tail> , " + phrase_text() + " by <head> ."; }
  /// The template used for extraction.
  std::string pattern() const { return passive_template ? passive_pattern() : active_pattern(); }
  /// Extraction template first, then the other voice.
  std::vector<std::string> templates() const {
    return passive_template ? std::vector{passive_pattern(), active_pattern()}
                            : std::vector{active_pattern(), passive_pattern()};
  }
  std::string description() const { return "a person who " + phrase_text() + " an organization"; }
};

struct SyntheticGrammar {
  std::vector<SyntheticRelation> relations;
  std::vector<std::string> first_names;
  std::vector<std::string> last_names;
  std::vector<std::string> org_names;
  std::vector<std::string> org_suffixes;

  RelationRegistry registry() const {
    RelationRegistry reg;
    for (const auto& r : relations)
      reg.add({r.id, r.phrase_text(), r.description(), r.templates()});
    return reg;
  }
  const SyntheticRelation* find(const std::string& id) const {
    for (const auto& r : relations)
      if (r.id == id) return &r;
    return nullptr;
  }
};

inline SyntheticGrammar make_grammar(std::size_t num_relations = 20, std::uint64_t seed = 0) {
  static const std::vector<std::string> kModifiers = {"formally", "quietly", "openly", "briefly",
                                                      "jointly", "rarely"};
  static const std::vector<std::string> kVerbs = {"advised", "funded", "joined",  "audited",
                                                  "sued",    "founded", "managed", "acquired"};
  if (num_relations < 2 || num_relations > kModifiers.size() * kVerbs.size())
    throw DataError("synthetic grammar: num_relations must lie in [2, " +
                    std::to_string(kModifiers.size() * kVerbs.size()) + "]");
  auto rng = SplitMix64::substream(seed, "synthetic", 0);
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t m = 0; m < kModifiers.size(); ++m)
    for (std::size_t v = 0; v < kVerbs.size(); ++v) combos.emplace_back(m, v);
  shuffle(combos, rng);
  SyntheticGrammar g;
  for (std::size_t i = 0; i < num_relations; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "R%02zu", i);
    g.relations.push_back({id, {kModifiers[combos[i].first], kVerbs[combos[i].second]}, i % 2 == 1});
  }
  g.first_names = {"Alice", "Bruno", "Chen", "Dana", "Elif", "Farid", "Greta", "Hugo",
                   "Ines",  "Jonas", "Keiko", "Lars", "Mina", "Nico", "Olga", "Pavel"};
  g.last_names = {"Abara", "Berg", "Costa", "Dumas",  "Ekman", "Fodor",  "Garcia", "Holm",
                  "Ito",   "Jansen", "Kovac", "Lind", "Moreau", "Novak", "Okafor", "Petrov"};
  g.org_names = {"Acme",  "Globex", "Initech", "Umbrella", "Hooli", "Vandelay",
                 "Soylent", "Cyberdyne", "Tyrell", "Wonka", "Stark", "Wayne"};
  g.org_suffixes = {"Labs", "Group", "Systems", "Partners", "Holdings"};
  return g;
}

struct SyntheticConfig {
  std::size_t num_relations = 20;
  std::size_t n_per_relation = 50;
  /// Share of all rows that carry two triplets.
  double multi_fraction = 0.2;
  /// Share of single rows whose label is swapped for a random other relation.
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"num_relations", num_relations}, {"n_per_relation", n_per_relation},
            {"multi_fraction", multi_fraction}, {"noise_fraction", noise_fraction},
            {"seed", seed}};
  }
};

namespace detail {
inline std::string clause(const SyntheticRelation& r, const std::string& head, const std::string& tail,
                          bool passive) {
  return passive ? tail + " , " + r.phrase_text() + " by " + head
                 : head + " " + r.phrase_text() + " " + tail;
}
}  // namespace detail

/// Single rows (n_per_relation per relation, context frame chosen per row)
/// followed by two-clause rows "C1 and C2 .". Deterministic in the seed.
inline Dataset generate(const SyntheticGrammar& g, const SyntheticConfig& cfg) {
  if (cfg.n_per_relation < 1) throw DataError("synthetic: n_per_relation must be >= 1");
  if (cfg.multi_fraction < 0.0 || cfg.multi_fraction >= 1.0)
    throw DataError("synthetic: multi_fraction must lie in [0, 1)");
  auto rng = SplitMix64::substream(cfg.seed, "synthetic", 1);
  const auto pick = [&](const std::vector<std::string>& pool) -> const std::string& {
    return pool[static_cast<std::size_t>(rng.below(pool.size()))];
  };
  const auto person = [&] { return pick(g.first_names) + " " + pick(g.last_names); };
  const auto org = [&] {
    std::string o = pick(g.org_names);
    if (rng.uniform() < 0.5) o += " " + pick(g.org_suffixes);
    return o;
  };

  Dataset ds;
  ds.relations = g.registry();
  std::size_t next_id = 0;
  const auto new_id = [&] {
    char buf[16];
    std::snprintf(buf, sizeof buf, "syn-%05zu", next_id++);
    return std::string(buf);
  };
  const std::size_t nrel = g.relations.size();
  for (std::size_t r = 0; r < nrel; ++r) {
    for (std::size_t i = 0; i < cfg.n_per_relation; ++i) {
      const std::string h = person(), t = org();
      const bool passive = rng.uniform() < 0.5;
      Example e;
      e.id = new_id();
      e.context = detail::clause(g.relations[r], h, t, passive) + " .";
      std::string label = g.relations[r].id;
      if (cfg.noise_fraction > 0.0 && rng.uniform() < cfg.noise_fraction)
        label = g.relations[(r + 1 + rng.below(nrel - 1)) % nrel].id;
      e.triplets = {{h, label, t}};
      ds.examples.push_back(std::move(e));
    }
  }
  const std::size_t singles = ds.examples.size();
  const auto n_multi = static_cast<std::size_t>(
      std::llround(cfg.multi_fraction / (1.0 - cfg.multi_fraction) * static_cast<double>(singles)));
  for (std::size_t i = 0; i < n_multi; ++i) {
    const std::size_t r1 = rng.below(nrel);
    const std::size_t r2 = (r1 + 1 + rng.below(nrel - 1)) % nrel;
    const std::string h1 = person(), t1 = org();
    std::string h2 = person(), t2 = org();
    while (h2 == h1) h2 = person();
    while (t2 == t1) t2 = org();
    const bool p1 = rng.uniform() < 0.5, p2 = rng.uniform() < 0.5;
    Example e;
    e.id = new_id();
    e.context = detail::clause(g.relations[r1], h1, t1, p1) + " and " +
                detail::clause(g.relations[r2], h2, t2, p2) + " .";
    e.triplets = {{h1, g.relations[r1].id, t1}, {h2, g.relations[r2].id, t2}};
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

inline Dataset generate(const SyntheticConfig& cfg) {
  return generate(make_grammar(cfg.num_relations, cfg.seed), cfg);
}

/// Reads the triplets straight off the grammar: for every verb phrase found,
/// the entities on either side of it within its clause.
inline std::vector<Triplet> copy_oracle(const SyntheticGrammar& g, std::string_view context) {
  const auto toks = tokenize(context);
  std::vector<Triplet> out;
  for (const auto& r : g.relations) {
    const auto it = std::search(toks.begin(), toks.end(), r.phrase.begin(), r.phrase.end());
    if (it == toks.end()) continue;
    const auto p = static_cast<std::size_t>(it - toks.begin());
    const std::size_t after = p + r.phrase.size();
    std::size_t begin = p, end = after;
    while (begin > 0 && toks[begin - 1] != "and") --begin;
    while (end < toks.size() && toks[end] != "and" && toks[end] != ".") ++end;
    const auto span = [&](std::size_t a, std::size_t b) {
      return join(std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(a),
                                           toks.begin() + static_cast<std::ptrdiff_t>(b)));
    };
    if (p > begin && toks[p - 1] == ",") {
      if (after < end && toks[after] == "by") out.push_back({span(after + 1, end), r.id, span(begin, p - 1)});
    } else {
      out.push_back({span(begin, p), r.id, span(after, end)});
    }
  }
  return out;
}

/// Ids of training examples whose context contains the verb phrase of a
/// held-out relation. Empty means no leak.
inline std::vector<std::string> leak_scan(const SyntheticGrammar& g, const Dataset& training,
                                          const std::vector<std::string>& heldout_relations) {
  std::vector<std::string> leaks;
  for (const auto& e : training.examples) {
    const auto toks = tokenize(e.context);
    for (const auto& id : heldout_relations) {
      const auto* r = g.find(id);
      if (r && contains_tokens(toks, r->phrase)) {
        leaks.push_back(e.id);
        break;
      }
    }
  }
  return leaks;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkConfig {
  SyntheticConfig data;
  std::size_t m = 5;
  std::size_t v = 5;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  /// Share of seen-relation single rows kept out of training for evaluation.
  double heldout_fraction = 0.1;
  /// Relation-filter embedder width; 256 buckets collide often on these texts.
  std::size_t embed_dim = 1024;
  std::vector<double> delta_grid;
  std::vector<double> threshold_grid = default_threshold_grid();
  bool ablations = true;
  unsigned threads = 1;

  BenchmarkConfig() {
    model.d_model = 64;
    model.heads = 4;
    model.encoder_layers = 2;
    model.decoder_layers = 2;
    model.ffn_dim = 128;
    model.max_input_len = 64;
    model.max_output_len = 24;
    train.batch_size = 16;
    train.learning_rate = 2e-3;
    train.warmup_ratio = 0.1;
    train.epochs = 6;
    train.weight_decay = 0.01;
    decode.max_output_len = 24;
    for (int i = 0; i <= 18; ++i) delta_grid.push_back(i * 0.05);
  }

  nlohmann::json to_json() const {
    return {{"data", data.to_json()},
            {"m", m},
            {"v", v},
            {"seeds", seeds},
            {"model", model.to_json()},
            {"train", train.to_json()},
            {"decode", {{"beam_size", decode.beam_size},
                        {"max_candidates_per_relation", decode.max_candidates_per_relation},
                        {"max_output_len", decode.max_output_len},
                        {"vocab_constraint", decode.vocab_constraint},
                        {"greedy", decode.greedy}}},
            {"heldout_fraction", heldout_fraction},
            {"embed_dim", embed_dim},
            {"delta_grid", delta_grid},
            {"threshold_grid", threshold_grid},
            {"ablations", ablations}};
  }
};

struct SeedResult {
  std::uint64_t seed = 0;
  FoldSpec fold;
  std::size_t train_pairs = 0;
  std::size_t train_steps = 0;
  double final_loss = 0.0;
  double delta = 0.0;
  double multi_delta = 0.0;
  double multi_threshold = 0.0;
  double seen_accuracy = 0.0;
  double unseen_accuracy = 0.0;
  double majority_baseline = 0.0;
  double oracle_accuracy = 0.0;
  PRF unseen_multi;
  double entity_accuracy = 0.0;
  std::vector<AblationRow> ablation_rows;
  std::size_t leaks = 0;
  double seconds = 0.0;
  /// Predictions for the unseen single-triplet test rows.
  std::vector<ExamplePrediction> predictions;
};

struct BenchmarkResult {
  std::vector<SeedResult> seeds;
  MetricReport report;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : seeds) {
      per.push_back({{"seed", s.seed},
                     {"fold", s.fold.to_json()},
                     {"train_pairs", s.train_pairs},
                     {"train_steps", s.train_steps},
                     {"final_loss", s.final_loss},
                     {"delta", s.delta},
                     {"multi_delta", s.multi_delta},
                     {"multi_threshold", s.multi_threshold},
                     {"seen_accuracy", s.seen_accuracy},
                     {"unseen_accuracy", s.unseen_accuracy},
                     {"majority_baseline", s.majority_baseline},
                     {"oracle_accuracy", s.oracle_accuracy},
                     {"unseen_multi", {{"precision", s.unseen_multi.precision},
                                       {"recall", s.unseen_multi.recall},
                                       {"f1", s.unseen_multi.f1}}},
                     {"entity_accuracy", s.entity_accuracy},
                     {"ablations", ablation_table_json(s.ablation_rows)},
                     {"leaks", s.leaks},
                     {"seconds", s.seconds}});
    }
    return {{"seeds", per}, {"report", report.to_json()}, {"seconds", seconds}};
  }
};

inline Dataset singles_of(Dataset ds) {
  std::erase_if(ds.examples, [](const Example& e) { return !e.single_triplet(); });
  return ds;
}
inline Dataset multis_of(Dataset ds) {
  std::erase_if(ds.examples, [](const Example& e) { return e.triplets.size() < 2; });
  return ds;
}

inline std::vector<RelationSpec> relation_pool(const Dataset& ds, const std::vector<std::string>& ids) {
  std::vector<RelationSpec> pool;
  for (const auto& id : ids) pool.push_back(ds.relations.at(id));
  return pool;
}

/// Train on the fold's training relations, calibrate on its validation
/// relations, evaluate on held-out seen rows and on the unseen test relations.
inline SeedResult run_benchmark_seed(const SyntheticGrammar& g, const Dataset& data,
                                     const Vocabulary& vocab, const BenchmarkConfig& cfg,
                                     std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedResult res;
  res.seed = seed;
  std::vector<std::string> ids = data.relations.ids();
  res.fold = split_folds(ids, cfg.m, cfg.v, seed);
  const std::set<std::string> train_rels(res.fold.train.begin(), res.fold.train.end());
  const std::set<std::string> val_rels(res.fold.validation.begin(), res.fold.validation.end());
  const std::set<std::string> test_rels(res.fold.test.begin(), res.fold.test.end());

  Dataset seen = project_strict(data, train_rels);
  Dataset heldout;
  heldout.relations = data.relations;
  {
    std::vector<std::size_t> single_idx;
    for (std::size_t i = 0; i < seen.examples.size(); ++i)
      if (seen.examples[i].single_triplet()) single_idx.push_back(i);
    auto rng = SplitMix64::substream(seed, "heldout");
    shuffle(single_idx, rng);
    const auto n_hold = static_cast<std::size_t>(
        std::llround(cfg.heldout_fraction * static_cast<double>(single_idx.size())));
    std::set<std::size_t> hold(single_idx.begin(), single_idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
    Dataset rest;
    rest.relations = data.relations;
    for (std::size_t i = 0; i < seen.examples.size(); ++i)
      (hold.count(i) ? heldout : rest).examples.push_back(seen.examples[i]);
    seen = std::move(rest);
  }
  res.leaks = leak_scan(g, seen, [&] {
                std::vector<std::string> h = res.fold.validation;
                h.insert(h.end(), res.fold.test.begin(), res.fold.test.end());
                return h;
              }()).size();

  ModelConfig mc = cfg.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  auto model = std::make_shared<Seq2SeqModel<float>>(mc);
  model->init_random(seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const auto pairs = make_train_pairs(seen, vocab, static_cast<std::size_t>(mc.max_input_len));
  res.train_pairs = pairs.size();
  const auto tr = train(*model, pairs, tc, cfg.threads);
  res.train_steps = tr.steps;
  res.final_loss = tr.loss_curve.empty() ? 0.0 : tr.loss_curve.back();

  const Seq2SeqBackend<float> backend(model);
  const HashedBowEmbedder embedder(cfg.embed_dim);
  const Extractor ex(backend, vocab, embedder);

  PredictionConfig pc;
  pc.decode = cfg.decode;
  pc.threads = cfg.threads;
  const Dataset val_single = singles_of(project_strict(data, val_rels));
  const Dataset val_multi = multis_of(project_strict(data, val_rels));
  const auto val_pool = relation_pool(data, res.fold.validation);
  res.delta = calibrate_delta(ex, val_single, val_pool, cfg.delta_grid, pc).best;
  pc.filter.delta = res.delta;
  res.multi_delta = res.delta;
  res.multi_threshold = kReferenceMultiThresholds[0];
  if (!val_multi.empty()) {
    const auto j = calibrate_multi_joint(ex, val_multi, val_pool, cfg.delta_grid, cfg.threshold_grid, pc);
    res.multi_delta = j.delta;
    res.multi_threshold = j.threshold;
  }

  const auto train_pool = relation_pool(data, res.fold.train);
  res.seen_accuracy = eval_single(heldout, predict_dataset(ex, heldout, train_pool, pc));

  const Dataset test_single = singles_of(project_strict(data, test_rels));
  const Dataset test_multi = multis_of(project_strict(data, test_rels));
  const auto test_pool = relation_pool(data, res.fold.test);
  res.predictions = predict_dataset(ex, test_single, test_pool, pc);
  res.unseen_accuracy = eval_single(test_single, res.predictions);
  res.majority_baseline = majority_baseline(test_single);
  {
    std::size_t hits = 0;
    for (const auto& e : test_single.examples) {
      const auto o = copy_oracle(g, e.context);
      hits += !o.empty() && same_triplet(o.front(), e.triplets.front());
    }
    res.oracle_accuracy = test_single.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(test_single.size());
  }
  if (!test_multi.empty()) {
    PredictionConfig mpc = pc;
    mpc.mode = PredictionMode::Multi;
    mpc.multi_threshold = res.multi_threshold;
    mpc.filter.delta = res.multi_delta;
    res.unseen_multi = eval_multi(test_multi, finalize(predict_dataset(ex, test_multi, test_pool, mpc), mpc));
  }
  res.entity_accuracy = eval_entity(test_single, ex, pc.decode);
  if (cfg.ablations) {
    res.ablation_rows = run_ablations(ex, test_single, test_pool, pc);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg,
                                     const std::function<void(const SeedResult&)>& on_seed = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticGrammar g = make_grammar(cfg.data.num_relations, cfg.data.seed);
  const Dataset data = generate(g, cfg.data);
  const Vocabulary vocab = dataset_vocab(data);
  BenchmarkResult out;
  out.report.mode = "benchmark";
  for (auto seed : cfg.seeds) {
    auto r = run_benchmark_seed(g, data, vocab, cfg, seed);
    std::map<std::string, double> m = {{"seen_accuracy", r.seen_accuracy},
                                       {"unseen_accuracy", r.unseen_accuracy},
                                       {"majority_baseline", r.majority_baseline},
                                       {"oracle_accuracy", r.oracle_accuracy},
                                       {"unseen_multi_precision", r.unseen_multi.precision},
                                       {"unseen_multi_recall", r.unseen_multi.recall},
                                       {"unseen_multi_f1", r.unseen_multi.f1},
                                       {"entity_accuracy", r.entity_accuracy}};
    for (const auto& row : r.ablation_rows) m["ablation." + row.name] = row.accuracy;
    out.report.add("seed" + std::to_string(seed), m);
    if (on_seed) on_seed(r);
    out.seeds.push_back(std::move(r));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace zett

#endif  // ZETT_SYNTHETIC_HPP_
