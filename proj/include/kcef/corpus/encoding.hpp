// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcef/corpus/substitution.hpp"
#include "kcef/corpus/vocab.hpp"

namespace kcef::corpus {

class SequenceTooLongError : public DataError {
 public:
  using DataError::DataError;
};

// Layout: [BOS] context [SEP] question [SEP] answer [EOS]. The answer span is
// the half-open range covering the answer tokens and the EOS.
struct EncodedSequence {
  std::string example_id;
  std::vector<TokenId> ids;
  std::size_t answer_begin = 0;
  std::size_t answer_end = 0;

  // Everything before the answer, i.e. what the model is conditioned on.
  std::span<const TokenId> prompt() const { return {ids.data(), answer_begin}; }
  std::span<const TokenId> answer_span() const {
    return {ids.data() + answer_begin, answer_end - answer_begin};
  }
};

EncodedSequence encode_sequence(std::string_view id, std::string_view context,
                                std::string_view question, std::string_view answer,
                                const Vocab& vocab, std::size_t max_seq_len);

EncodedSequence encode_training_sequence(const QAExample& example, const Vocab& vocab,
                                         std::size_t max_seq_len);
// Uses c' and x'.
EncodedSequence encode_training_sequence(const SubstitutedExample& example, const Vocab& vocab,
                                         std::size_t max_seq_len);

// [BOS] context [SEP] question [SEP]; `reserve` extra positions must remain
// free for the generated answer. Throws SequenceTooLongError naming `id`.
std::vector<TokenId> encode_prompt(std::string_view id, std::string_view context,
                                   std::string_view question, const Vocab& vocab,
                                   std::size_t max_seq_len, std::size_t reserve = 0);

}  // namespace kcef::corpus
