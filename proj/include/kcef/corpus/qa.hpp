// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcef/corpus/kb.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::corpus {

enum class ContextKind { kSupporting, kDistractor };

std::string_view to_string(ContextKind kind);
ContextKind parse_context_kind(std::string_view text);

struct QAExample {
  std::string id;
  std::string question;
  std::string context;
  std::string answer;
  EntityType answer_type = EntityType::kPer;
  ContextKind context_kind = ContextKind::kSupporting;

  bool operator==(const QAExample&) const = default;
};

class TemplateError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Question templates use {subject}; context templates use {subject} and
// {object}.
struct RelationTemplates {
  std::string question;
  std::string context;
};

using TemplateSet = std::map<std::string, RelationTemplates>;

TemplateSet default_templates();

// Replaces every "{subject}" and "{object}" placeholder.
std::string fill_template(std::string_view tmpl, std::string_view subject,
                          std::string_view object);

// One example per fact, ids "q00000", "q00001", ... in fact order. With
// probability `distractor_rate` the context comes from another fact of the
// same relation whose rendered context does not mention the answer; when no
// such fact exists the example stays supporting.
std::vector<QAExample> render_qa(std::span<const Fact> facts, const TemplateSet& templates,
                                 double distractor_rate, std::uint64_t seed);

// Throws DataError if the supporting/distractor invariant does not hold.
void validate_example(const QAExample& example);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string_view text, std::string_view from, std::string_view to);

}  // namespace kcef::corpus
