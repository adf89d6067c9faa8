// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/substitution.hpp"

#include <map>
#include <random>
#include <unordered_set>

namespace kcef::corpus {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::string> effective_pool(const QAExample& example,
                                        std::span<const std::string> pool) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const std::string& candidate : pool) {
    if (candidate.empty() || candidate == example.answer) continue;
    if (example.context.find(candidate) != std::string::npos) continue;
    if (candidate.find(example.answer) != std::string::npos) continue;
    if (seen.insert(candidate).second) out.push_back(candidate);
  }
  return out;
}

std::optional<std::string> substitution_violation(const SubstitutedExample& s) {
  const std::string& x = s.base.answer;
  const std::string& c = s.base.context;
  if (s.policy != kCorpusSubstitutionPolicy) return "unknown policy '" + s.policy + "'";
  if (s.base.context_kind != ContextKind::kSupporting) return "base example is not supporting";
  if (s.answer_sub == x) return "x' equals x";
  if (s.answer_sub.empty()) return "x' is empty";
  const std::size_t n = count_occurrences(c, x);
  if (n == 0) return "x does not occur in c";
  if (s.context_sub != replace_all(c, x, s.answer_sub)) {
    return "c' is not c with every x replaced by x'";
  }
  if (count_occurrences(s.context_sub, s.answer_sub) != n) {
    return "x' occurrence count in c' differs from x count in c";
  }
  if (s.context_sub.find(x) != std::string::npos) return "x still occurs in c'";
  if (replace_all(s.context_sub, s.answer_sub, x) != c) return "round trip does not recover c";
  return std::nullopt;
}

SubstitutedExample substitute_corpus(const QAExample& example, std::span<const std::string> pool,
                                     std::uint64_t seed) {
  if (example.context_kind != ContextKind::kSupporting) {
    throw NotSubstitutableError("example " + example.id +
                                " has a distractor context and cannot be substituted");
  }
  const std::vector<std::string> candidates = effective_pool(example, pool);
  if (candidates.empty()) {
    throw DataError("example " + example.id + ": no same-type substitute available for '" +
                    example.answer + "'");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  SubstitutedExample out;
  out.base = example;
  out.answer_sub = candidates[pick(rng)];
  out.context_sub = replace_all(example.context, example.answer, out.answer_sub);
  if (auto violation = substitution_violation(out)) {
    throw DataError("example " + example.id + ": substitution broke an invariant: " + *violation);
  }
  return out;
}

std::vector<SubstitutedExample> substitute_dataset(std::span<const QAExample> examples,
                                                   std::uint64_t seed) {
  std::map<EntityType, std::vector<std::string>> pools;
  for (const QAExample& ex : examples) pools[ex.answer_type].push_back(ex.answer);

  std::vector<SubstitutedExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const QAExample& ex = examples[i];
    if (ex.context_kind != ContextKind::kSupporting) continue;
    out.push_back(substitute_corpus(ex, pools[ex.answer_type], mix_seed(seed, i)));
  }
  return out;
}

}  // namespace kcef::corpus
