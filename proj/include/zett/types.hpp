// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_TYPES_HPP_
#define ZETT_TYPES_HPP_

#include <string>
#include <tuple>
#include <vector>

#include "zett/common.hpp"

namespace zett {

/// A (head, relation, tail) fact.
struct Triplet {
  std::string head;
  std::string relation;
  std::string tail;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// Exact match after whitespace normalization; relation ids compare verbatim.
inline bool same_triplet(const Triplet& a, const Triplet& b) {
  return a.relation == b.relation && normalize_ws(a.head) == normalize_ws(b.head) &&
         normalize_ws(a.tail) == normalize_ws(b.tail);
}

inline Triplet normalized(Triplet t) {
  t.head = normalize_ws(t.head);
  t.tail = normalize_ws(t.tail);
  return t;
}

struct Example {
  std::string id;
  std::string context;
  std::vector<Triplet> triplets;
  /// Set at load time when some triplet's head or tail is not a token
  /// subsequence of the context. Flagged rows are kept unless dropped.
  bool entity_not_in_context = false;

  bool single_triplet() const noexcept { return triplets.size() == 1; }

  friend bool operator==(const Example& a, const Example& b) {
    return a.id == b.id && a.context == b.context && a.triplets == b.triplets;
  }
};

struct RelationSpec {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> templates;

  friend bool operator==(const RelationSpec&, const RelationSpec&) = default;
};

}  // namespace zett

#endif  // ZETT_TYPES_HPP_
