// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/qa.hpp"

#include <cstdio>
#include <random>

namespace kcef::corpus {

std::string_view to_string(ContextKind kind) {
  return kind == ContextKind::kSupporting ? "supporting" : "distractor";
}

ContextKind parse_context_kind(std::string_view text) {
  if (text == "supporting") return ContextKind::kSupporting;
  if (text == "distractor") return ContextKind::kDistractor;
  throw DataError("unknown context_kind '" + std::string(text) + "'");
}

TemplateSet default_templates() {
  return {
      {"nationality", {"What is {subject}'s nationality?", "{subject} nationality is {object}."}},
      {"birth_date", {"When was {subject} born?", "{subject} was born on {object}."}},
      {"employer",
       {"Which organization does {subject} work for?", "{subject} works for {object}."}},
      {"headquarters",
       {"Where is {subject} headquartered?", "{subject} is headquartered in {object}."}},
      {"employees",
       {"How many employees does {subject} have?", "{subject} has {object} employees."}},
      {"founded", {"When was {subject} founded?", "{subject} was founded on {object}."}},
  };
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
  if (from.empty()) return std::string(text);
  std::string out;
  std::size_t start = 0;
  for (std::size_t pos = text.find(from); pos != std::string_view::npos;
       pos = text.find(from, start)) {
    out.append(text.substr(start, pos - start));
    out.append(to);
    start = pos + from.size();
  }
  out.append(text.substr(start));
  return out;
}

std::string fill_template(std::string_view tmpl, std::string_view subject,
                          std::string_view object) {
  return replace_all(replace_all(tmpl, "{subject}", subject), "{object}", object);
}

void validate_example(const QAExample& example) {
  const bool present = example.context.find(example.answer) != std::string::npos;
  if (example.context_kind == ContextKind::kSupporting && !present) {
    throw DataError("example " + example.id + ": supporting context does not contain the answer");
  }
  if (example.context_kind == ContextKind::kDistractor && present) {
    throw DataError("example " + example.id + ": distractor context contains the answer");
  }
}

std::vector<QAExample> render_qa(std::span<const Fact> facts, const TemplateSet& templates,
                                 double distractor_rate, std::uint64_t seed) {
  if (!(distractor_rate >= 0.0 && distractor_rate < 1.0)) {
    throw ConfigError("distractor rate must lie in [0, 1)");
  }
  for (const Fact& f : facts) {
    auto it = templates.find(f.relation);
    if (it == templates.end()) {
      throw TemplateError("no templates for relation '" + f.relation + "'");
    }
    const RelationTemplates& t = it->second;
    if (t.question.find("{subject}") == std::string::npos) {
      throw TemplateError("question template for '" + f.relation + "' lacks {subject}");
    }
    if (t.context.find("{subject}") == std::string::npos ||
        t.context.find("{object}") == std::string::npos) {
      throw TemplateError("context template for '" + f.relation +
                          "' needs both {subject} and {object}");
    }
  }

  std::map<std::string, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < facts.size(); ++i) by_relation[facts[i].relation].push_back(i);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<QAExample> out;
  out.reserve(facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const Fact& f = facts[i];
    const RelationTemplates& t = templates.at(f.relation);
    QAExample ex;
    char id[32];
    std::snprintf(id, sizeof(id), "q%05zu", i);
    ex.id = id;
    ex.question = fill_template(t.question, f.subject, "");
    ex.answer = f.object;
    ex.answer_type = f.object_type;
    ex.context = fill_template(t.context, f.subject, f.object);
    ex.context_kind = ContextKind::kSupporting;

    if (coin(rng) < distractor_rate) {
      std::vector<std::string> candidates;
      for (std::size_t j : by_relation[f.relation]) {
        if (j == i || facts[j].object == f.object) continue;
        std::string c = fill_template(t.context, facts[j].subject, facts[j].object);
        if (c.find(f.object) == std::string::npos) candidates.push_back(std::move(c));
      }
      if (!candidates.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        ex.context = std::move(candidates[pick(rng)]);
        ex.context_kind = ContextKind::kDistractor;
      }
    }
    validate_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace kcef::corpus
