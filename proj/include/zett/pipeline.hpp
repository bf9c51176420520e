// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_PIPELINE_HPP_
#define ZETT_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "zett/data_model.hpp"
#include "zett/decoder.hpp"
#include "zett/relation_filter.hpp"

namespace zett {

enum class PredictionMode { Single, Multi };
enum class TemplatePolicy { First, MaxOverTemplates };

struct PredictionConfig {
  PredictionMode mode = PredictionMode::Single;
  /// Multi-triplet cut: keep candidates with score strictly above it.
  std::optional<double> multi_threshold;
  DecodeConfig decode;
  FilterConfig filter;
  TemplatePolicy template_policy = TemplatePolicy::First;
  /// Workers for per-relation decoding. Results do not depend on it.
  unsigned threads = 1;

  void validate() const {
    decode.validate();
    if (mode == PredictionMode::Multi && !multi_threshold)
      throw DataError("multi-triplet mode requires a threshold");
  }
};

/// Operating points reported for the original large-scale setup; kept for
/// reference only. Desk-scale runs recalibrate both on validation data.
inline constexpr double kReferenceDelta = 0.85;
inline constexpr double kReferenceMultiThresholds[] = {-2.5, -2.6};

/// Default multi-threshold grid: -3.5, -3.4, ..., -2.0.
inline std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 35; i >= 20; --i) grid.push_back(-static_cast<double>(i) / 10.0);
  return grid;
}

inline std::optional<Triplet> predict_single(const std::vector<ScoredCandidate>& ranked) {
  if (ranked.empty()) return std::nullopt;
  return ranked.front().triplet;
}

/// Candidates with score > threshold, in rank order.
inline std::vector<Triplet> predict_multi(const std::vector<ScoredCandidate>& ranked,
                                          double threshold) {
  std::vector<Triplet> out;
  for (const auto& c : ranked)
    if (c.score > threshold) out.push_back(c.triplet);
  return out;
}

/// Binds a scoring backend, its vocabulary, and a relation embedder.
class Extractor {
 public:
  Extractor(const ScoringBackend& backend, const Vocabulary& vocab, const Embedder& embedder)
      : backend_(backend), vocab_(vocab), embedder_(embedder) {}

  const ScoringBackend& backend() const noexcept { return backend_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const Embedder& embedder() const noexcept { return embedder_; }

  /// Candidates for one relation under the template policy, deduplicated.
  std::vector<ScoredCandidate> decode_relation(std::string_view context, const RelationSpec& rel,
                                               const PredictionConfig& cfg) const {
    std::vector<ScoredCandidate> all;
    const std::size_t n = cfg.template_policy == TemplatePolicy::First ? 1 : rel.templates.size();
    for (std::size_t i = 0; i < n && i < rel.templates.size(); ++i) {
      const Template tpl = validate_template(rel.templates[i], rel.id);
      for (auto& c : zett::decode_relation(backend_, vocab_, context, tpl, cfg.decode))
        all.push_back(std::move(c));
    }
    return rank_candidates(std::move(all));
  }

  /// Filter -> per-relation decode -> merge -> rank.
  std::vector<ScoredCandidate> extract(std::string_view context,
                                       const std::vector<RelationSpec>& candidates,
                                       const PredictionConfig& cfg) const {
    if (candidates.empty()) throw DataError("extract: no candidate relations");
    const auto sims = relation_similarities(embedder_, context, candidates);
    const auto keep = select_relations(sims, cfg.filter);
    std::vector<std::vector<ScoredCandidate>> per(keep.size());
    parallel_for(keep.size(), cfg.threads, [&](std::size_t i) {
      per[i] = decode_relation(context, candidates[keep[i]], cfg);
      for (auto& c : per[i]) c.relation_similarity = sims[keep[i]];
    });
    std::vector<ScoredCandidate> merged;
    for (auto& v : per)
      for (auto& c : v) merged.push_back(std::move(c));
    return rank_candidates(std::move(merged));
  }

 private:
  const ScoringBackend& backend_;
  const Vocabulary& vocab_;
  const Embedder& embedder_;
};

struct ExamplePrediction {
  std::string id;
  std::vector<ScoredCandidate> ranked;
};

/// Ranked candidates for every example against the same relation pool.
inline std::vector<ExamplePrediction> predict_dataset(const Extractor& ex, const Dataset& data,
                                                      const std::vector<RelationSpec>& pool,
                                                      const PredictionConfig& cfg) {
  std::vector<ExamplePrediction> out;
  out.reserve(data.size());
  for (const auto& e : data.examples) out.push_back({e.id, ex.extract(e.context, pool, cfg)});
  return out;
}

/// The mode's final output per example: the full ranking (single) or the
/// candidates above threshold (multi).
inline std::vector<ExamplePrediction> finalize(std::vector<ExamplePrediction> preds,
                                               const PredictionConfig& cfg) {
  if (cfg.mode == PredictionMode::Multi) {
    const double th = cfg.multi_threshold.value();
    for (auto& p : preds)
      std::erase_if(p.ranked, [&](const ScoredCandidate& c) { return !(c.score > th); });
  }
  return preds;
}

/// Prediction file: one JSON object per line,
/// {"id": ..., "predictions": [{"head","relation","tail","score"}, ...]}.
inline std::string serialize_predictions(const std::vector<ExamplePrediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : p.ranked)
      arr.push_back({{"head", c.triplet.head}, {"relation", c.triplet.relation},
                     {"tail", c.triplet.tail}, {"score", c.score}});
    out += nlohmann::json{{"id", p.id}, {"predictions", arr}}.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<ExamplePrediction> parse_predictions(std::string_view text,
                                                        const std::string& source = "<memory>") {
  std::vector<ExamplePrediction> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (normalize_ws(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ExamplePrediction p;
      p.id = j.at("id").get<std::string>();
      for (const auto& c : j.at("predictions"))
        p.ranked.push_back({Triplet{c.at("head").get<std::string>(), c.at("relation").get<std::string>(),
                                    c.at("tail").get<std::string>()},
                            c.value("score", 0.0), 0.0, {}});
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": malformed prediction line: " + e.what());
    }
  }
  return out;
}

inline void save_predictions(const std::vector<ExamplePrediction>& preds, const std::string& path) {
  write_file(path, serialize_predictions(preds));
}
inline std::vector<ExamplePrediction> load_predictions(const std::string& path) {
  return parse_predictions(read_file(path), path);
}

/// Per-example decode results for every pool relation, reusable across
/// filter thresholds (only relation selection changes with delta).
struct CachedDecodes {
  std::vector<double> similarities;
  std::vector<std::vector<ScoredCandidate>> per_relation;

  std::vector<ScoredCandidate> ranked(const FilterConfig& filter) const {
    std::vector<ScoredCandidate> merged;
    for (std::size_t i : select_relations(similarities, filter))
      for (const auto& c : per_relation[i]) merged.push_back(c);
    return rank_candidates(std::move(merged));
  }
};

inline CachedDecodes cache_decodes(const Extractor& ex, std::string_view context,
                                   const std::vector<RelationSpec>& pool,
                                   const PredictionConfig& cfg) {
  CachedDecodes c;
  c.similarities = relation_similarities(ex.embedder(), context, pool);
  c.per_relation.resize(pool.size());
  parallel_for(pool.size(), cfg.threads, [&](std::size_t i) {
    c.per_relation[i] = ex.decode_relation(context, pool[i], cfg);
    for (auto& s : c.per_relation[i]) s.relation_similarity = c.similarities[i];
  });
  return c;
}

struct CalibrationResult {
  double best = 0.0;
  std::vector<double> grid;
  std::vector<double> metric;  // validation metric per grid value
};

/// Highest single-triplet validation accuracy over `grid`; ties go to the
/// smaller delta. Only single-triplet validation examples are scored.
inline CalibrationResult calibrate_delta(const Extractor& ex, const Dataset& validation,
                                         const std::vector<RelationSpec>& pool,
                                         std::vector<double> grid, PredictionConfig cfg) {
  if (grid.empty()) throw DataError("calibrate_delta: empty grid");
  if (validation.empty()) throw DataError("calibrate_delta: empty validation set");
  std::sort(grid.begin(), grid.end());
  std::vector<const Example*> items;
  for (const auto& e : validation.examples)
    if (e.single_triplet()) items.push_back(&e);
  std::vector<CachedDecodes> cache;
  for (const auto* e : items) cache.push_back(cache_decodes(ex, e->context, pool, cfg));
  CalibrationResult r;
  r.grid = grid;
  double best_acc = -1.0;
  for (double d : grid) {
    FilterConfig f = cfg.filter;
    f.delta = d;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto top = predict_single(cache[i].ranked(f));
      if (top && same_triplet(*top, items[i]->triplets.front())) ++hits;
    }
    const double acc = items.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(items.size());
    r.metric.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      r.best = d;
    }
  }
  return r;
}

/// Micro precision/recall/F1 of exact-triplet matches over a split.
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PRF micro_prf(std::size_t tp, std::size_t n_pred, std::size_t n_gold) {
  PRF r;
  r.precision = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  r.recall = n_gold ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

/// (true positives, predicted, gold) for one example; both sides deduplicated.
inline std::array<std::size_t, 3> match_counts(const std::vector<Triplet>& gold,
                                               const std::vector<Triplet>& pred) {
  std::set<Triplet> g, p;
  for (const auto& t : gold) g.insert(normalized(t));
  for (const auto& t : pred) p.insert(normalized(t));
  std::size_t tp = 0;
  for (const auto& t : p) tp += g.count(t);
  return {tp, p.size(), g.size()};
}

/// Highest validation multi-triplet micro F1 over `grid`; ties go to the
/// smaller (more permissive) threshold. Multi-triplet examples only.
inline CalibrationResult calibrate_multi_threshold(const Extractor& ex, const Dataset& validation,
                                                   const std::vector<RelationSpec>& pool,
                                                   std::vector<double> grid,
                                                   const PredictionConfig& cfg) {
  if (grid.empty()) throw DataError("calibrate_multi_threshold: empty grid");
  std::sort(grid.begin(), grid.end());
  std::vector<const Example*> items;
  for (const auto& e : validation.examples)
    if (!e.single_triplet() && !e.triplets.empty()) items.push_back(&e);
  std::vector<std::vector<ScoredCandidate>> ranked;
  for (const auto* e : items) ranked.push_back(ex.extract(e->context, pool, cfg));
  CalibrationResult r;
  r.grid = grid;
  double best_f1 = -1.0;
  for (double th : grid) {
    std::size_t tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto c = match_counts(items[i]->triplets, predict_multi(ranked[i], th));
      tp += c[0];
      np += c[1];
      ng += c[2];
    }
    const double f1 = micro_prf(tp, np, ng).f1;
    r.metric.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      r.best = th;
    }
  }
  return r;
}

struct JointCalibration {
  double delta = 0.0;
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Filter threshold and multi-triplet cut chosen together on validation
/// multi-triplet rows. Ties go to the smaller delta, then the smaller threshold.
inline JointCalibration calibrate_multi_joint(const Extractor& ex, const Dataset& validation,
                                              const std::vector<RelationSpec>& pool,
                                              std::vector<double> delta_grid,
                                              std::vector<double> threshold_grid,
                                              const PredictionConfig& cfg) {
  if (delta_grid.empty() || threshold_grid.empty())
    throw DataError("calibrate_multi_joint: empty grid");
  std::sort(delta_grid.begin(), delta_grid.end());
  std::sort(threshold_grid.begin(), threshold_grid.end());
  std::vector<const Example*> items;
  for (const auto& e : validation.examples)
    if (e.triplets.size() >= 2) items.push_back(&e);
  std::vector<CachedDecodes> cache;
  for (const auto* e : items) cache.push_back(cache_decodes(ex, e->context, pool, cfg));
  JointCalibration best{delta_grid.front(), threshold_grid.front(), -1.0};
  for (double d : delta_grid) {
    FilterConfig f = cfg.filter;
    f.delta = d;
    std::vector<std::vector<ScoredCandidate>> ranked;
    for (const auto& c : cache) ranked.push_back(c.ranked(f));
    for (double th : threshold_grid) {
      std::size_t tp = 0, np = 0, ng = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto c = match_counts(items[i]->triplets, predict_multi(ranked[i], th));
        tp += c[0];
        np += c[1];
        ng += c[2];
      }
      const double f1 = micro_prf(tp, np, ng).f1;
      if (f1 > best.f1) best = {d, th, f1};
    }
  }
  return best;
}

}  // namespace zett

#endif  // ZETT_PIPELINE_HPP_
