// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>

#include "kcef/corpus/substitution.hpp"

namespace kcef::pipeline {

// Example id -> answer string.
using AnswerMap = std::map<std::string, std::string>;

// Whitespace-normalized, case-sensitive equality.
bool exact_match(std::string_view prediction, std::string_view gold);

// Whether the whitespace-normalized gold answer occurs inside the prediction.
// Diagnostic only; never used as a gate.
bool contains_match(std::string_view prediction, std::string_view gold);

// Fraction of ids whose prediction exactly matches the reference. Throws
// DataError when either map is empty or the id sets differ.
double memorization_rate(const AnswerMap& predictions, const AnswerMap& references);

struct SubstitutedScores {
  double p_s = 0.0;          // predictions equal to x'
  double persistence = 0.0;  // predictions still equal to the original x
};

// Scores predictions over one split of the substituted set. The id sets must
// agree exactly; throws DataError on an empty split.
SubstitutedScores substituted_accuracy(const AnswerMap& predictions,
                                       std::span<const corpus::SubstitutedExample> split);

}  // namespace kcef::pipeline
