// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/decode.hpp"

#include <algorithm>

#include "kcef/util/errors.hpp"

namespace kcef::model {

namespace {

template <typename Real>
void check_budget(const TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
                  std::size_t prompt_len, std::size_t max_new) {
  if (prompt_len == 0) throw ShapeError("greedy_decode: empty prefix");
  const std::size_t extra = adapters != nullptr ? adapters->prefix_len() : 0;
  if (prompt_len + max_new + extra > model.config.max_seq_len) {
    throw ShapeError("greedy_decode: prefix of " + std::to_string(prompt_len) + " tokens plus " +
                     std::to_string(max_new) + " new tokens exceeds max_seq_len " +
                     std::to_string(model.config.max_seq_len));
  }
}

}  // namespace

template <typename Real>
std::vector<std::vector<TokenId>> greedy_decode_batch(
    const TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
    std::span<const std::vector<TokenId>> prompts, std::size_t max_new, TokenId stop,
    std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  for (const auto& p : prompts) check_budget(model, adapters, p.size(), max_new);

  const std::size_t vocab = model.config.vocab_size;
  std::vector<std::vector<TokenId>> out(prompts.size());
  for (std::size_t start = 0; start < prompts.size(); start += batch_size) {
    const std::size_t end = std::min(prompts.size(), start + batch_size);
    std::vector<std::size_t> active;
    std::vector<std::vector<TokenId>> seqs;
    for (std::size_t i = start; i < end; ++i) {
      active.push_back(i);
      seqs.push_back(prompts[i]);
    }
    for (std::size_t step = 0; step < max_new && !active.empty(); ++step) {
      const TokenBatch batch = make_batch(seqs);
      ad::Tape<Real> tape(ad::Tape<Real>::Mode::kInference);
      const ad::Tensor<Real> logits = forward(tape, model, batch, adapters);
      const auto data = logits.data();

      std::vector<std::size_t> still_active;
      std::vector<std::vector<TokenId>> still_seqs;
      for (std::size_t r = 0; r < active.size(); ++r) {
        const Real* row = data.data() + (r * batch.seq_len + seqs[r].size() - 1) * vocab;
        TokenId best = 0;
        for (std::size_t v = 1; v < vocab; ++v) {
          if (row[v] > row[best]) best = static_cast<TokenId>(v);
        }
        if (best == stop) continue;
        out[active[r]].push_back(best);
        seqs[r].push_back(best);
        still_active.push_back(active[r]);
        still_seqs.push_back(std::move(seqs[r]));
      }
      active = std::move(still_active);
      seqs = std::move(still_seqs);
    }
  }
  return out;
}

template <typename Real>
std::vector<TokenId> greedy_decode(const TransformerLM<Real>& model,
                                   const erasure::AdapterSet<Real>* adapters,
                                   std::span<const TokenId> prefix, std::size_t max_new,
                                   TokenId stop) {
  std::vector<std::vector<TokenId>> prompts{std::vector<TokenId>(prefix.begin(), prefix.end())};
  return greedy_decode_batch(model, adapters, std::span<const std::vector<TokenId>>(prompts),
                             max_new, stop, 1)
      .front();
}

#define KCEF_INSTANTIATE_DECODE(Real)                                                          \
  template std::vector<TokenId> greedy_decode(const TransformerLM<Real>&,                      \
                                              const erasure::AdapterSet<Real>*,                \
                                              std::span<const TokenId>, std::size_t, TokenId); \
  template std::vector<std::vector<TokenId>> greedy_decode_batch(                              \
      const TransformerLM<Real>&, const erasure::AdapterSet<Real>*,                            \
      std::span<const std::vector<TokenId>>, std::size_t, TokenId, std::size_t);

KCEF_INSTANTIATE_DECODE(float)
KCEF_INSTANTIATE_DECODE(double)

#undef KCEF_INSTANTIATE_DECODE

}  // namespace kcef::model
