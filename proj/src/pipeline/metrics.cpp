// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/pipeline/metrics.hpp"

#include "kcef/corpus/vocab.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::pipeline {

bool exact_match(std::string_view prediction, std::string_view gold) {
  return corpus::exact_match(prediction, gold);
}

bool contains_match(std::string_view prediction, std::string_view gold) {
  const std::string g = corpus::collapse_whitespace(gold);
  return !g.empty() && corpus::collapse_whitespace(prediction).find(g) != std::string::npos;
}

double memorization_rate(const AnswerMap& predictions, const AnswerMap& references) {
  if (predictions.empty() || references.empty()) {
    throw DataError("memorization_rate: empty prediction or reference set");
  }
  if (predictions.size() != references.size()) {
    throw DataError("memorization_rate: " + std::to_string(predictions.size()) +
                    " predictions but " + std::to_string(references.size()) + " references");
  }
  std::size_t hits = 0;
  auto p = predictions.begin();
  for (auto r = references.begin(); r != references.end(); ++r, ++p) {
    if (p->first != r->first) {
      throw DataError("memorization_rate: id sets differ at " + p->first + " / " + r->first);
    }
    hits += exact_match(p->second, r->second);
  }
  return static_cast<double>(hits) / static_cast<double>(references.size());
}

SubstitutedScores substituted_accuracy(const AnswerMap& predictions,
                                       std::span<const corpus::SubstitutedExample> split) {
  if (split.empty()) throw DataError("substituted_accuracy: empty split");
  AnswerMap substituted;
  AnswerMap original;
  for (const auto& s : split) {
    if (!substituted.emplace(s.base.id, s.answer_sub).second) {
      throw DataError("substituted_accuracy: duplicate id " + s.base.id);
    }
    original.emplace(s.base.id, s.base.answer);
  }
  return {memorization_rate(predictions, substituted), memorization_rate(predictions, original)};
}

}  // namespace kcef::pipeline
