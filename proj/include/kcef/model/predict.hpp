// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kcef/corpus/vocab.hpp"
#include "kcef/model/transformer.hpp"

namespace kcef::model {

struct Query {
  std::string id;
  std::string context;
  std::string question;
};

inline constexpr std::size_t kMaxAnswerTokens = 8;

// Greedy answers for [BOS] context [SEP] question [SEP] prompts, decoded to
// space-joined token strings. Generation stops at EOS or after
// kMaxAnswerTokens, or earlier if the prompt leaves less room.
template <typename Real>
std::vector<std::string> predict_answers(const TransformerLM<Real>& model,
                                         const erasure::AdapterSet<Real>* adapters,
                                         const corpus::Vocab& vocab, std::span<const Query> queries,
                                         std::size_t batch_size = 32);

}  // namespace kcef::model
