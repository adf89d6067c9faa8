// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/predict.hpp"

#include <algorithm>

#include "kcef/corpus/encoding.hpp"
#include "kcef/model/decode.hpp"

namespace kcef::model {

template <typename Real>
std::vector<std::string> predict_answers(const TransformerLM<Real>& model,
                                         const erasure::AdapterSet<Real>* adapters,
                                         const corpus::Vocab& vocab, std::span<const Query> queries,
                                         std::size_t batch_size) {
  const std::size_t budget =
      model.config.max_seq_len - (adapters != nullptr ? adapters->prefix_len() : 0);
  std::vector<std::vector<TokenId>> prompts;
  std::size_t longest = 0;
  for (const Query& q : queries) {
    // Reserve one slot so at least one token can be generated.
    prompts.push_back(corpus::encode_prompt(q.id, q.context, q.question, vocab, budget, 1));
    longest = std::max(longest, prompts.back().size());
  }
  if (prompts.empty()) return {};
  const std::size_t max_new = std::min(kMaxAnswerTokens, budget - longest);
  const auto generated =
      greedy_decode_batch(model, adapters, std::span<const std::vector<TokenId>>(prompts), max_new,
                          corpus::kEosId, batch_size);
  std::vector<std::string> out;
  out.reserve(generated.size());
  for (const auto& ids : generated) out.push_back(vocab.decode(ids));
  return out;
}

template std::vector<std::string> predict_answers(const TransformerLM<float>&,
                                                  const erasure::AdapterSet<float>*,
                                                  const corpus::Vocab&, std::span<const Query>,
                                                  std::size_t);
template std::vector<std::string> predict_answers(const TransformerLM<double>&,
                                                  const erasure::AdapterSet<double>*,
                                                  const corpus::Vocab&, std::span<const Query>,
                                                  std::size_t);

}  // namespace kcef::model
