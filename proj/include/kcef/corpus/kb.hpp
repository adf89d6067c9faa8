// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kcef::corpus {

enum class EntityType { kPer, kDat, kNum, kOrg, kLoc };

inline constexpr std::array<EntityType, 5> kAllEntityTypes = {
    EntityType::kPer, EntityType::kDat, EntityType::kNum, EntityType::kOrg, EntityType::kLoc};

std::string_view to_string(EntityType type);
// Throws DataError on anything but PER/DAT/NUM/ORG/LOC.
EntityType parse_entity_type(std::string_view text);

struct Relation {
  std::string id;
  EntityType subject_type;
  EntityType object_type;
};

struct Fact {
  std::string subject;
  std::string relation;
  std::string object;
  EntityType object_type;

  bool operator==(const Fact&) const = default;
};

struct KbSpec {
  std::map<EntityType, std::size_t> entity_counts;
  std::vector<Relation> relations;
  // When set, a seeded subset of this many facts is kept (original order).
  std::optional<std::size_t> max_facts;
};

// Every subject entity gets one fact per relation whose subject type matches,
// with the object drawn uniformly from the relation's range. Entity surface
// strings are unique and no entity string is a substring of another, so
// string-level substitution can never touch a neighbouring entity.
//
// Throws DataError when a relation's range type has fewer than two entities.
std::vector<Fact> generate_kb(const KbSpec& spec, std::uint64_t seed);

// Six relations over the five entity types, sized so that generate_kb yields
// exactly `n_facts` facts.
KbSpec default_kb_spec(std::size_t n_facts);
std::vector<Relation> default_relations();

}  // namespace kcef::corpus
