// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kcef/model/transformer.hpp"

namespace kcef::model {

// Appends the argmax token (lowest id on ties) until `stop` appears or
// `max_new` tokens were produced. The result excludes the prefix and the stop
// token. Throws ShapeError unless prefix.size() + max_new (+ prefix adapter
// length) fits in max_seq_len.
template <typename Real>
std::vector<TokenId> greedy_decode(const TransformerLM<Real>& model,
                                   const erasure::AdapterSet<Real>* adapters,
                                   std::span<const TokenId> prefix, std::size_t max_new,
                                   TokenId stop);

// Same result as calling greedy_decode on each prompt; prompts are decoded in
// right-padded groups of `batch_size`.
template <typename Real>
std::vector<std::vector<TokenId>> greedy_decode_batch(
    const TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
    std::span<const std::vector<TokenId>> prompts, std::size_t max_new, TokenId stop,
    std::size_t batch_size = 32);

}  // namespace kcef::model
