// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_PREPARE_HPP_
#define ZETT_PREPARE_HPP_

#include <string>
#include <vector>

#include "zett/data_model.hpp"
#include "zett/decoder.hpp"
#include "zett/train.hpp"

namespace zett {

/// Vocabulary over every context and masked template of a dataset.
inline Vocabulary dataset_vocab(const Dataset& ds, int min_count = 1) {
  std::vector<std::string> texts;
  for (const auto& e : ds.examples) texts.push_back(e.context);
  for (const auto& id : ds.relations.ids())
    for (const auto& p : ds.relations.at(id).templates)
      texts.push_back(mask(validate_template(p, id), "").masked_template);
  return build_vocab(texts, min_count);
}

/// One (prompt, target) pair per gold triplet and template of its relation
/// (only the first template when all_templates is false).
inline std::vector<TrainPair> make_train_pairs(const Dataset& ds, const Vocabulary& vocab,
                                               std::size_t max_input_len, bool all_templates = true) {
  std::vector<TrainPair> pairs;
  for (const auto& e : ds.examples)
    for (const auto& t : e.triplets) {
      const auto& rel = ds.relations.at(t.relation);
      const std::size_t n = all_templates ? rel.templates.size() : 1;
      for (std::size_t i = 0; i < n; ++i) {
        const auto prompt = mask(validate_template(rel.templates[i], rel.id), e.context);
        pairs.push_back({prompt_input_ids(prompt, vocab, max_input_len),
                         encode(build_target(t, prompt), vocab)});
      }
    }
  return pairs;
}

}  // namespace zett

#endif  // ZETT_PREPARE_HPP_
