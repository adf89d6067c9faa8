// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kcef/corpus/qa.hpp"
#include "kcef/corpus/substitution.hpp"

namespace kcef::pipeline {

struct CorpusConfig {
  std::size_t facts = 300;
  double distractor_rate = 0.3;
  std::uint64_t seed = 1;
};

struct GeneratedCorpus {
  std::vector<corpus::QAExample> dataset;
  std::vector<corpus::SubstitutedExample> substituted;  // supporting examples only
};

// KB generation, QA rendering and substitution each draw from their own
// stream derived from config.seed.
GeneratedCorpus generate_corpus(const CorpusConfig& config);

}  // namespace kcef::pipeline
