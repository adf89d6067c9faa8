// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/pipeline/data.hpp"

#include "kcef/corpus/kb.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::pipeline {

GeneratedCorpus generate_corpus(const CorpusConfig& config) {
  if (config.facts == 0) throw ConfigError("facts must be positive");
  const auto facts =
      corpus::generate_kb(corpus::default_kb_spec(config.facts), corpus::mix_seed(config.seed, 1));
  GeneratedCorpus out;
  out.dataset = corpus::render_qa(facts, corpus::default_templates(), config.distractor_rate,
                                  corpus::mix_seed(config.seed, 2));
  out.substituted = corpus::substitute_dataset(out.dataset, corpus::mix_seed(config.seed, 3));
  return out;
}

}  // namespace kcef::pipeline
