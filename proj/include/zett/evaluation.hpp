// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_EVALUATION_HPP_
#define ZETT_EVALUATION_HPP_

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "zett/pipeline.hpp"

namespace zett {

namespace detail {
inline std::unordered_map<std::string, const ExamplePrediction*> index_predictions(
    const std::vector<ExamplePrediction>& preds) {
  std::unordered_map<std::string, const ExamplePrediction*> idx;
  for (const auto& p : preds) idx.emplace(p.id, &p);
  return idx;
}
}  // namespace detail

/// Fraction of examples whose top-1 prediction equals the gold triplet.
/// Examples without a prediction count as wrong.
inline double eval_single(const Dataset& gold, const std::vector<ExamplePrediction>& preds) {
  if (gold.empty()) return 0.0;
  const auto idx = detail::index_predictions(preds);
  std::size_t hits = 0;
  for (const auto& e : gold.examples) {
    if (!e.single_triplet())
      throw DataError("eval_single: example " + e.id + " does not have exactly one triplet");
    const auto it = idx.find(e.id);
    if (it == idx.end() || it->second->ranked.empty()) continue;
    if (same_triplet(it->second->ranked.front().triplet, e.triplets.front())) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

/// Precision/recall/F1 over exact triplet matches. Micro: counts pooled over
/// the split. Macro: per-relation scores averaged over every relation seen in
/// gold or predictions. Duplicate triplets count once per example.
inline PRF eval_multi(const Dataset& gold, const std::vector<ExamplePrediction>& preds,
                      bool macro = false) {
  const auto idx = detail::index_predictions(preds);
  std::map<std::string, std::array<std::size_t, 3>> per_rel;
  std::array<std::size_t, 3> total{0, 0, 0};
  for (const auto& e : gold.examples) {
    std::vector<Triplet> pred;
    if (const auto it = idx.find(e.id); it != idx.end())
      for (const auto& c : it->second->ranked) pred.push_back(c.triplet);
    const auto c = match_counts(e.triplets, pred);
    for (int k = 0; k < 3; ++k) total[k] += c[k];
    if (macro) {
      std::set<Triplet> g, p;
      for (const auto& t : e.triplets) g.insert(normalized(t));
      for (const auto& t : pred) p.insert(normalized(t));
      for (const auto& t : p) {
        per_rel[t.relation][1] += 1;
        per_rel[t.relation][0] += g.count(t);
      }
      for (const auto& t : g) per_rel[t.relation][2] += 1;
    }
  }
  if (!macro) return micro_prf(total[0], total[1], total[2]);
  PRF avg;
  if (per_rel.empty()) return avg;
  for (const auto& [rel, c] : per_rel) {
    const PRF r = micro_prf(c[0], c[1], c[2]);
    avg.precision += r.precision;
    avg.recall += r.recall;
    avg.f1 += r.f1;
  }
  const double n = static_cast<double>(per_rel.size());
  avg.precision /= n;
  avg.recall /= n;
  avg.f1 /= n;
  return avg;
}

/// Entity extraction: each (example, gold triplet) is decoded with the gold
/// relation's first template alone; a hit needs both head and tail exact.
inline double eval_entity(const Dataset& gold, const Extractor& ex, const DecodeConfig& cfg) {
  std::size_t items = 0, hits = 0;
  for (const auto& e : gold.examples) {
    for (const auto& t : e.triplets) {
      ++items;
      const auto& rel = gold.relations.at(t.relation);
      const Template tpl = validate_template(rel.templates.front(), rel.id);
      const auto cands = zett::decode_relation(ex.backend(), ex.vocab(), e.context, tpl, cfg);
      if (!cands.empty() && same_triplet(cands.front().triplet, t)) ++hits;
    }
  }
  return items ? static_cast<double>(hits) / static_cast<double>(items) : 0.0;
}

/// Share of the most frequent relation among single-triplet gold examples.
inline double majority_baseline(const Dataset& gold) {
  std::map<std::string, std::size_t> freq;
  std::size_t n = 0;
  for (const auto& e : gold.examples) {
    if (!e.single_triplet()) continue;
    ++freq[e.triplets.front().relation];
    ++n;
  }
  std::size_t best = 0;
  for (const auto& [r, c] : freq) best = std::max(best, c);
  return n ? static_cast<double>(best) / static_cast<double>(n) : 0.0;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Named metrics collected per fold or seed, with mean and spread.
struct MetricReport {
  std::string mode;  // single | multi | entity | benchmark
  std::vector<std::string> folds;
  std::map<std::string, std::vector<double>> values;

  void add(const std::string& fold, const std::map<std::string, double>& metrics) {
    folds.push_back(fold);
    for (const auto& [k, v] : metrics) {
      auto& col = values[k];
      col.resize(folds.size() - 1, std::nan(""));
      col.push_back(v);
    }
  }
  double mean(const std::string& key) const { return mean_of(values.at(key)); }
  double stddev(const std::string& key) const { return stddev_of(values.at(key)); }

  nlohmann::json to_json() const {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : values)
      metrics[k] = {{"per_fold", v}, {"mean", mean_of(v)}, {"stddev", stddev_of(v)}};
    return {{"mode", mode}, {"folds", folds}, {"metrics", metrics}};
  }
};

/// One ablation row: a name, the configuration it ran with, and its accuracy.
struct AblationRow {
  std::string name;
  PredictionConfig config;
  double accuracy = 0.0;
};

inline constexpr const char* kAblationNames[] = {"full", "no-vocab-constraint", "greedy",
                                                 "no-filter"};

/// The base configuration with exactly one named setting turned off.
inline PredictionConfig ablated_config(PredictionConfig base, std::string_view name) {
  if (name == "full") return base;
  if (name == "no-vocab-constraint") {
    base.decode.vocab_constraint = false;
  } else if (name == "greedy") {
    base.decode.greedy = true;
  } else if (name == "no-filter") {
    base.filter.delta = -1.0;
    base.filter.fallback_top1 = false;
  } else {
    throw UsageError("unknown ablation: " + std::string(name));
  }
  return base;
}

/// Single-triplet accuracy for each named configuration on the same data.
inline std::vector<AblationRow> run_ablations(const Extractor& ex, const Dataset& gold,
                                              const std::vector<RelationSpec>& pool,
                                              const PredictionConfig& base,
                                              const std::vector<std::string>& names = {
                                                  kAblationNames[0], kAblationNames[1],
                                                  kAblationNames[2], kAblationNames[3]}) {
  std::vector<AblationRow> rows;
  for (const auto& n : names) {
    AblationRow r{n, ablated_config(base, n), 0.0};
    r.accuracy = eval_single(gold, predict_dataset(ex, gold, pool, r.config));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json ablation_table_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"ablation", r.name}, {"accuracy", r.accuracy},
                   {"beam_size", r.config.decode.effective_beam()},
                   {"vocab_constraint", r.config.decode.vocab_constraint},
                   {"delta", r.config.filter.delta},
                   {"fallback_top1", r.config.filter.fallback_top1}});
  return out;
}

// ---------------------------------------------------------------------------
// Human evaluation

struct AnnotationRecord {
  std::string example_id;
  int rank = 1;
  Triplet triplet;
  double score = 0.0;
  std::optional<bool> annotator1;
  std::optional<bool> annotator2;

  bool doubly_labeled() const noexcept { return annotator1.has_value() && annotator2.has_value(); }
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct HumanEvalExport {
  std::vector<AnnotationRecord> records;
  /// Sampled contexts that had fewer than k predictions.
  std::vector<std::string> short_contexts;
};

/// Samples n_contexts prediction entries with the "humaneval-sample"
/// substream and emits their top-k candidates as unlabeled records. The
/// sample is listed in ascending id order.
inline HumanEvalExport export_human_eval(const std::vector<ExamplePrediction>& preds,
                                         std::size_t k = 5, std::size_t n_contexts = 200,
                                         std::uint64_t seed = 0) {
  if (k < 1 || k > 5) throw DataError("export_human_eval: k must lie in [1, 5]");
  std::vector<const ExamplePrediction*> pool;
  for (const auto& p : preds) pool.push_back(&p);
  std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->id < b->id; });
  auto rng = SplitMix64::substream(seed, "humaneval-sample");
  shuffle(pool, rng);
  pool.resize(std::min(pool.size(), n_contexts));
  std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->id < b->id; });
  HumanEvalExport out;
  for (const auto* p : pool) {
    const std::size_t n = std::min(k, p->ranked.size());
    if (n < k) out.short_contexts.push_back(p->id);
    for (std::size_t i = 0; i < n; ++i)
      out.records.push_back({p->id, static_cast<int>(i + 1), p->ranked[i].triplet,
                             p->ranked[i].score, std::nullopt, std::nullopt});
  }
  return out;
}

namespace detail {
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// RFC 4180 rows: quoted fields may hold commas, quotes ("") and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw DataError("annotation file: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string label_text(const std::optional<bool>& l) {
  return l ? (*l ? "true" : "false") : "";
}
inline std::optional<bool> parse_label(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  if (s == "true") return true;
  if (s == "false") return false;
  throw DataError("annotation file row " + std::to_string(line) + ": label must be true, false or empty, got '" + s + "'");
}
}  // namespace detail

inline constexpr std::string_view kAnnotationHeader =
    "example_id,rank,head,relation,tail,score,annotator1,annotator2";

inline std::string serialize_annotations(const std::vector<AnnotationRecord>& records) {
  std::string out(kAnnotationHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    const nlohmann::json score = r.score;
    out += detail::csv_field(r.example_id) + "," + std::to_string(r.rank) + "," +
           detail::csv_field(r.triplet.head) + "," + detail::csv_field(r.triplet.relation) + "," +
           detail::csv_field(r.triplet.tail) + "," + score.dump() + "," +
           detail::label_text(r.annotator1) + "," + detail::label_text(r.annotator2) + "\n";
  }
  return out;
}

inline std::vector<AnnotationRecord> parse_annotations(std::string_view text) {
  const auto rows = detail::parse_csv(text);
  if (rows.empty() || join(rows.front(), ",") != kAnnotationHeader)
    throw DataError("annotation file: missing or wrong header");
  std::vector<AnnotationRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 8)
      throw DataError("annotation file row " + std::to_string(i + 1) + ": expected 8 fields");
    AnnotationRecord r;
    r.example_id = f[0];
    try {
      r.rank = std::stoi(f[1]);
      r.score = std::stod(f[5]);
    } catch (const std::exception&) {
      throw DataError("annotation file row " + std::to_string(i + 1) + ": bad rank or score");
    }
    if (r.rank < 1 || r.rank > 5)
      throw DataError("annotation file row " + std::to_string(i + 1) + ": rank out of [1, 5]");
    r.triplet = {f[2], f[3], f[4]};
    r.annotator1 = detail::parse_label(f[6], i + 1);
    r.annotator2 = detail::parse_label(f[7], i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

inline void save_annotations(const std::vector<AnnotationRecord>& records, const std::string& path) {
  write_file(path, serialize_annotations(records));
}
inline std::vector<AnnotationRecord> load_annotations(const std::string& path) {
  return parse_annotations(read_file(path));
}

/// Cohen's kappa for two binary label vectors of equal length.
inline double cohen_kappa(const std::vector<std::pair<bool, bool>>& labels) {
  if (labels.empty()) throw DataError("cohen_kappa: no labels");
  double tt = 0, tf = 0, ft = 0, ff = 0;
  for (const auto& [a, b] : labels) {
    if (a && b) ++tt;
    else if (a) ++tf;
    else if (b) ++ft;
    else ++ff;
  }
  const double n = static_cast<double>(labels.size());
  const double po = (tt + ff) / n;
  const double pe = ((tt + tf) / n) * ((tt + ft) / n) + ((ff + ft) / n) * ((ff + tf) / n);
  if (pe >= 1.0) {
    if (po >= 1.0) return 1.0;
    throw DataError("cohen_kappa: undefined (chance agreement is 1)");
  }
  return (po - pe) / (1.0 - pe);
}

inline double cohen_kappa(const std::vector<AnnotationRecord>& records) {
  std::vector<std::pair<bool, bool>> labels;
  for (const auto& r : records) {
    if (!r.doubly_labeled())
      throw DataError("cohen_kappa: record " + r.example_id + "#" + std::to_string(r.rank) +
                      " is not labeled by both annotators");
    labels.emplace_back(*r.annotator1, *r.annotator2);
  }
  return cohen_kappa(labels);
}

struct RescoreResult {
  double original = 0.0;
  double corrected = 0.0;
  std::size_t contexts = 0;
  /// Records skipped because a label was missing.
  std::size_t unlabeled = 0;
};

/// Accuracy over the annotated contexts, where a top-1 prediction also counts
/// as correct when both annotators marked it true.
inline RescoreResult rescore_with_annotations(const Dataset& gold,
                                              const std::vector<ExamplePrediction>& preds,
                                              const std::vector<AnnotationRecord>& records) {
  RescoreResult out;
  std::set<std::string> sampled;
  std::set<std::pair<std::string, Triplet>> accepted;
  for (const auto& r : records) {
    sampled.insert(r.example_id);
    if (!r.doubly_labeled()) {
      ++out.unlabeled;
      continue;
    }
    if (*r.annotator1 && *r.annotator2) accepted.emplace(r.example_id, normalized(r.triplet));
  }
  const auto idx = detail::index_predictions(preds);
  std::size_t orig = 0, corr = 0;
  for (const auto& e : gold.examples) {
    if (!sampled.count(e.id)) continue;
    ++out.contexts;
    const auto it = idx.find(e.id);
    if (it == idx.end() || it->second->ranked.empty()) continue;
    const Triplet& top = it->second->ranked.front().triplet;
    const bool gold_hit =
        std::any_of(e.triplets.begin(), e.triplets.end(), [&](const Triplet& g) { return same_triplet(g, top); });
    orig += gold_hit;
    corr += gold_hit || accepted.count({e.id, normalized(top)}) > 0;
  }
  if (out.contexts) {
    out.original = static_cast<double>(orig) / static_cast<double>(out.contexts);
    out.corrected = static_cast<double>(corr) / static_cast<double>(out.contexts);
  }
  return out;
}

}  // namespace zett

#endif  // ZETT_EVALUATION_HPP_
