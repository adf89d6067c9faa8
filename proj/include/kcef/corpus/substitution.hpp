// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcef/corpus/qa.hpp"

namespace kcef::corpus {

inline constexpr std::string_view kCorpusSubstitutionPolicy = "corpus_substitution";

struct SubstitutedExample {
  QAExample base;
  std::string answer_sub;
  std::string context_sub;
  std::string policy{kCorpusSubstitutionPolicy};

  bool operator==(const SubstitutedExample&) const = default;
};

class NotSubstitutableError : public DataError {
 public:
  using DataError::DataError;
};

// Candidates from `pool` that can stand in for the answer: distinct from x,
// not already present in c, and not containing x (otherwise x would survive
// into c'). Order of first appearance in `pool`, duplicates removed.
std::vector<std::string> effective_pool(const QAExample& example,
                                        std::span<const std::string> pool);

// Draws x' uniformly from the effective pool and rewrites every occurrence of
// x in c. Throws NotSubstitutableError for distractor examples and DataError
// when the effective pool is empty.
SubstitutedExample substitute_corpus(const QAExample& example, std::span<const std::string> pool,
                                     std::uint64_t seed);

// First violated invariant, or nullopt when the example is well formed. Type
// preservation is not visible here; callers that know each surface string's
// type check it separately.
std::optional<std::string> substitution_violation(const SubstitutedExample& example);

// Substitutes every supporting example, drawing each x' from the answers of
// the same entity type found in `examples`. Distractor examples are skipped.
// Each example's draw is seeded from (seed, position) so results do not depend
// on which other examples are present.
std::vector<SubstitutedExample> substitute_dataset(std::span<const QAExample> examples,
                                                   std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace kcef::corpus
