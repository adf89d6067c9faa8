// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/kb.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_set>

#include "kcef/util/errors.hpp"

namespace kcef::corpus {

std::string_view to_string(EntityType type) {
  switch (type) {
    case EntityType::kPer: return "PER";
    case EntityType::kDat: return "DAT";
    case EntityType::kNum: return "NUM";
    case EntityType::kOrg: return "ORG";
    case EntityType::kLoc: return "LOC";
  }
  return "?";
}

EntityType parse_entity_type(std::string_view text) {
  for (EntityType t : kAllEntityTypes) {
    if (to_string(t) == text) return t;
  }
  throw DataError("unknown entity type '" + std::string(text) + "'");
}

namespace {

constexpr std::string_view kOnsets = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::string_view kCodas = "lnrs";
constexpr std::array<std::string_view, 8> kOrgSuffixes = {
    "Institute", "Corporation", "Navy", "University", "Foundation", "Group", "Bank", "Press"};
constexpr std::array<std::string_view, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

class SurfaceFactory {
 public:
  explicit SurfaceFactory(std::uint64_t seed) : rng_(seed) {}

  std::string make(EntityType type) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::string candidate = propose(type);
      if (accept(candidate)) return candidate;
    }
    throw DataError("could not generate enough distinct " + std::string(to_string(type)) +
                    " entities");
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string word(std::size_t min_syllables, std::size_t max_syllables) {
    const std::size_t syllables = min_syllables + pick(max_syllables - min_syllables + 1);
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
      w += kOnsets[pick(kOnsets.size())];
      w += kVowels[pick(kVowels.size())];
    }
    if (pick(2) == 0) w += kCodas[pick(kCodas.size())];
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
  }

  std::string propose(EntityType type) {
    switch (type) {
      case EntityType::kPer: return word(2, 2) + " " + word(2, 3);
      case EntityType::kLoc: return word(3, 3);
      case EntityType::kOrg:
        return word(2, 3) + " " + std::string(kOrgSuffixes[pick(kOrgSuffixes.size())]);
      case EntityType::kDat:
        return std::to_string(1 + pick(28)) + " " + std::string(kMonths[pick(kMonths.size())]) +
               " " + std::to_string(1900 + pick(121));
      case EntityType::kNum: return std::to_string(1000 + pick(99000));
    }
    return {};
  }

  bool accept(const std::string& candidate) {
    if (!seen_.insert(candidate).second) return false;
    for (const std::string& other : accepted_) {
      if (other.find(candidate) != std::string::npos ||
          candidate.find(other) != std::string::npos) {
        return false;
      }
    }
    accepted_.push_back(candidate);
    return true;
  }

  std::mt19937_64 rng_;
  std::unordered_set<std::string> seen_;
  std::vector<std::string> accepted_;
};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::vector<Fact> generate_kb(const KbSpec& spec, std::uint64_t seed) {
  auto count_of = [&spec](EntityType t) {
    auto it = spec.entity_counts.find(t);
    return it == spec.entity_counts.end() ? std::size_t{0} : it->second;
  };
  for (const Relation& r : spec.relations) {
    if (count_of(r.object_type) < 2) {
      throw DataError("relation '" + r.id + "' has range " + std::string(to_string(r.object_type)) +
                      " with fewer than 2 entities; substitution needs a same-type alternative");
    }
  }

  std::mt19937_64 rng(seed);
  SurfaceFactory factory(rng());
  std::map<EntityType, std::vector<std::string>> entities;
  for (EntityType t : kAllEntityTypes) {
    auto& list = entities[t];
    for (std::size_t i = 0; i < count_of(t); ++i) list.push_back(factory.make(t));
  }

  std::vector<Fact> facts;
  for (const Relation& r : spec.relations) {
    const auto& objects = entities[r.object_type];
    std::uniform_int_distribution<std::size_t> pick(0, objects.size() - 1);
    for (const std::string& subject : entities[r.subject_type]) {
      facts.push_back({subject, r.id, objects[pick(rng)], r.object_type});
    }
  }

  if (spec.max_facts && *spec.max_facts < facts.size()) {
    std::vector<std::size_t> order(facts.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(*spec.max_facts);
    std::sort(order.begin(), order.end());
    std::vector<Fact> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(std::move(facts[i]));
    facts = std::move(kept);
  }
  return facts;
}

std::vector<Relation> default_relations() {
  return {
      {"nationality", EntityType::kPer, EntityType::kLoc},
      {"birth_date", EntityType::kPer, EntityType::kDat},
      {"employer", EntityType::kPer, EntityType::kOrg},
      {"headquarters", EntityType::kOrg, EntityType::kLoc},
      {"employees", EntityType::kOrg, EntityType::kNum},
      {"founded", EntityType::kOrg, EntityType::kDat},
  };
}

KbSpec default_kb_spec(std::size_t n_facts) {
  if (n_facts == 0) throw DataError("knowledge base needs at least one fact");
  // PER and ORG are each the subject of three relations.
  const std::size_t subjects = std::max<std::size_t>(2, ceil_div(n_facts, 6));
  KbSpec spec;
  spec.entity_counts = {
      {EntityType::kPer, subjects},
      {EntityType::kOrg, subjects},
      {EntityType::kLoc, std::max<std::size_t>(2, ceil_div(n_facts, 12))},
      {EntityType::kDat, std::max<std::size_t>(2, ceil_div(n_facts, 5))},
      {EntityType::kNum, std::max<std::size_t>(2, ceil_div(n_facts, 5))},
  };
  spec.relations = default_relations();
  spec.max_facts = n_facts;
  return spec;
}

}  // namespace kcef::corpus
