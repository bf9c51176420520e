// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_DATA_MODEL_HPP_
#define ZETT_DATA_MODEL_HPP_

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "zett/templates.hpp"
#include "zett/tokenizer.hpp"
#include "zett/types.hpp"

namespace zett {

/// Ordered set of relation specs with id lookup.
class RelationRegistry {
 public:
  RelationRegistry() = default;
  explicit RelationRegistry(std::vector<RelationSpec> specs) {
    for (auto& s : specs) add(std::move(s));
  }

  void add(RelationSpec spec) {
    if (spec.id.empty()) throw DataError("relation with empty id");
    if (index_.count(spec.id)) throw DataError("duplicate relation id: " + spec.id);
    if (normalize_ws(spec.description).empty())
      throw DataError("relation " + spec.id + " has an empty description");
    if (spec.templates.empty()) throw DataError("relation " + spec.id + " has no templates");
    for (const auto& p : spec.templates) validate_template(p, spec.id);
    index_.emplace(spec.id, specs_.size());
    specs_.push_back(std::move(spec));
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const RelationSpec& at(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown relation id: " + id);
    return specs_[it->second];
  }
  const std::vector<RelationSpec>& specs() const noexcept { return specs_; }
  std::size_t size() const noexcept { return specs_.size(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& s : specs_) out.push_back(s.id);
    return out;
  }
  std::vector<RelationSpec> subset(const std::vector<std::string>& ids) const {
    std::vector<RelationSpec> out;
    for (const auto& id : ids) out.push_back(at(id));
    return out;
  }

  /// Template objects for a relation, in registry order.
  std::vector<Template> templates_of(const std::string& id) const {
    std::vector<Template> out;
    for (const auto& p : at(id).templates) out.push_back(validate_template(p, id));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : specs_)
      arr.push_back({{"id", s.id}, {"name", s.name}, {"description", s.description},
                     {"templates", s.templates}});
    return arr;
  }

  static RelationRegistry from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("relation registry must be a JSON array");
    RelationRegistry reg;
    std::size_t i = 0;
    for (const auto& item : j) {
      try {
        RelationSpec s;
        s.id = item.at("id").get<std::string>();
        s.name = item.value("name", s.id);
        s.description = item.at("description").get<std::string>();
        s.templates = item.at("templates").get<std::vector<std::string>>();
        reg.add(std::move(s));
      } catch (const nlohmann::json::exception& e) {
        throw DataError("relation registry entry " + std::to_string(i) + ": " + e.what());
      }
      ++i;
    }
    return reg;
  }

  static RelationRegistry load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed relation registry " + path + ": " + e.what());
    }
  }
  void save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

  friend bool operator==(const RelationRegistry& a, const RelationRegistry& b) {
    return a.specs_ == b.specs_;
  }

 private:
  std::vector<RelationSpec> specs_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
  std::vector<Example> examples;
  RelationRegistry relations;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
};

/// True when `needle` occurs as a contiguous token run inside `haystack`.
inline bool contains_tokens(const std::vector<std::string>& haystack,
                            const std::vector<std::string>& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

inline bool entities_in_context(const Example& ex) {
  const auto ctx = tokenize(ex.context);
  for (const auto& t : ex.triplets)
    if (!contains_tokens(ctx, tokenize(t.head)) || !contains_tokens(ctx, tokenize(t.tail)))
      return false;
  return true;
}

inline nlohmann::json example_to_json(const Example& ex) {
  nlohmann::json trips = nlohmann::json::array();
  for (const auto& t : ex.triplets)
    trips.push_back({{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}});
  return {{"id", ex.id}, {"text", ex.context}, {"triplets", trips}};
}

/// Parse JSONL dataset text against a registry. `source` names the input in
/// error messages. Rows with ids missing get "row<N>" (N = 1-based line).
inline Dataset parse_dataset(std::string_view text, const RelationRegistry& registry,
                             const std::string& source = "<memory>") {
  Dataset ds;
  ds.relations = registry;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (normalize_ws(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed line: " + e.what());
    }
    Example ex;
    try {
      ex.id = j.contains("id") && !j["id"].is_null() ? j["id"].get<std::string>()
                                                     : "row" + std::to_string(line_no);
      ex.context = j.at("text").get<std::string>();
      for (const auto& t : j.at("triplets")) {
        Triplet tr{t.at("head").get<std::string>(), t.at("relation").get<std::string>(),
                   t.at("tail").get<std::string>()};
        if (normalize_ws(tr.head).empty() || normalize_ws(tr.tail).empty())
          throw DataError(where + ": empty head or tail entity");
        if (!registry.contains(tr.relation))
          throw DataError(where + ": unknown relation id '" + tr.relation + "'");
        ex.triplets.push_back(std::move(tr));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed line: " + e.what());
    }
    if (!seen_ids.insert(ex.id).second) throw DataError(where + ": duplicate example id '" + ex.id + "'");
    ex.entity_not_in_context = !entities_in_context(ex);
    ds.examples.push_back(std::move(ex));
    if (end == text.size()) break;
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, const RelationRegistry& registry) {
  return parse_dataset(read_file(path), registry, path);
}

inline Dataset load_dataset(const std::string& path, const std::string& registry_path) {
  return load_dataset(path, RelationRegistry::load(registry_path));
}

/// Canonical JSONL: sorted keys, one example per line, '\n' terminated.
inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& ex : ds.examples) {
    out += example_to_json(ex).dump();
    out.push_back('\n');
  }
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  write_file(path, serialize_dataset(ds));
}

/// Drops rows flagged entity_not_in_context (the CLI's --strict).
inline Dataset drop_flagged(Dataset ds) {
  std::erase_if(ds.examples, [](const Example& e) { return e.entity_not_in_context; });
  return ds;
}

struct FoldSpec {
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t v = 5;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  friend bool operator==(const FoldSpec&, const FoldSpec&) = default;

  nlohmann::json to_json() const {
    return {{"seed", seed}, {"m", m}, {"v", v}, {"train", train}, {"validation", validation},
            {"test", test}};
  }
  static FoldSpec from_json(const nlohmann::json& j) {
    try {
      FoldSpec f;
      f.seed = j.at("seed").get<std::uint64_t>();
      f.m = j.at("m").get<std::size_t>();
      f.v = j.at("v").get<std::size_t>();
      f.train = j.at("train").get<std::vector<std::string>>();
      f.validation = j.at("validation").get<std::vector<std::string>>();
      f.test = j.at("test").get<std::vector<std::string>>();
      return f;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed fold spec: ") + e.what());
    }
  }
  static FoldSpec load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed fold file " + path + ": " + e.what());
    }
  }
  void save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }
};

/// Deterministic zero-shot split: sort ids, Fisher-Yates with
/// SplitMix64(seed), then the first m ids are test, the next v validation and
/// the rest train. Each output set is stored sorted.
inline FoldSpec split_folds(std::vector<std::string> relations, std::size_t m, std::size_t v,
                            std::uint64_t seed) {
  std::sort(relations.begin(), relations.end());
  if (std::adjacent_find(relations.begin(), relations.end()) != relations.end())
    throw DataError("split_folds: duplicate relation ids");
  if (m + v >= relations.size())
    throw DataError("split_folds: m + v (" + std::to_string(m + v) +
                    ") must be smaller than the number of relations (" +
                    std::to_string(relations.size()) + ")");
  SplitMix64 rng(seed);
  shuffle(relations, rng);
  FoldSpec f;
  f.seed = seed;
  f.m = m;
  f.v = v;
  f.test.assign(relations.begin(), relations.begin() + static_cast<std::ptrdiff_t>(m));
  f.validation.assign(relations.begin() + static_cast<std::ptrdiff_t>(m),
                      relations.begin() + static_cast<std::ptrdiff_t>(m + v));
  f.train.assign(relations.begin() + static_cast<std::ptrdiff_t>(m + v), relations.end());
  std::sort(f.test.begin(), f.test.end());
  std::sort(f.validation.begin(), f.validation.end());
  std::sort(f.train.begin(), f.train.end());
  return f;
}

/// Keeps examples with at least one triplet in `relation_ids`, restricting
/// each kept example's triplets to those relations.
inline Dataset project(const Dataset& ds, const std::set<std::string>& relation_ids) {
  Dataset out;
  out.relations = ds.relations;
  for (const auto& ex : ds.examples) {
    Example e = ex;
    std::erase_if(e.triplets, [&](const Triplet& t) { return !relation_ids.count(t.relation); });
    if (!e.triplets.empty()) out.examples.push_back(std::move(e));
  }
  return out;
}

inline Dataset project(const Dataset& ds, const std::vector<std::string>& relation_ids) {
  return project(ds, std::set<std::string>(relation_ids.begin(), relation_ids.end()));
}

/// Keeps only examples whose triplets all lie in `relation_ids`. Used for
/// training splits, where a row mentioning any held-out relation would leak it.
inline Dataset project_strict(const Dataset& ds, const std::set<std::string>& relation_ids) {
  Dataset out;
  out.relations = ds.relations;
  for (const auto& ex : ds.examples) {
    if (ex.triplets.empty()) continue;
    if (std::all_of(ex.triplets.begin(), ex.triplets.end(),
                    [&](const Triplet& t) { return relation_ids.count(t.relation) != 0; }))
      out.examples.push_back(ex);
  }
  return out;
}

}  // namespace zett

#endif  // ZETT_DATA_MODEL_HPP_
