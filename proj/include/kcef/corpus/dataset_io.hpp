// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// JSONL dataset files, one object per line.
//   base:        id, question, context, answer, answer_type, context_kind
//   substituted: the base fields plus answer_sub, context_sub, policy

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kcef/corpus/substitution.hpp"

namespace kcef::corpus {

std::string to_jsonl_line(const QAExample& example);
std::string to_jsonl_line(const SubstitutedExample& example);

std::string to_jsonl(std::span<const QAExample> examples);
std::string to_jsonl(std::span<const SubstitutedExample> examples);

// Throw DataError with the offending line number on malformed input. Blank
// lines are skipped.
std::vector<QAExample> read_examples(std::istream& in);
std::vector<SubstitutedExample> read_substituted(std::istream& in);
std::vector<QAExample> read_examples(const std::filesystem::path& path);
std::vector<SubstitutedExample> read_substituted(const std::filesystem::path& path);

}  // namespace kcef::corpus
