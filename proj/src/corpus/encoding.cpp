// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/encoding.hpp"

namespace kcef::corpus {

namespace {

void check_length(std::string_view id, std::size_t length, std::size_t max_seq_len) {
  if (length > max_seq_len) {
    throw SequenceTooLongError("example " + std::string(id) + " encodes to " +
                               std::to_string(length) + " tokens, above max_seq_len " +
                               std::to_string(max_seq_len));
  }
}

std::vector<TokenId> prompt_ids(std::string_view context, std::string_view question,
                                const Vocab& vocab) {
  std::vector<TokenId> ids{kBosId};
  for (TokenId t : vocab.encode(context)) ids.push_back(t);
  ids.push_back(kSepId);
  for (TokenId t : vocab.encode(question)) ids.push_back(t);
  ids.push_back(kSepId);
  return ids;
}

}  // namespace

std::vector<TokenId> encode_prompt(std::string_view id, std::string_view context,
                                   std::string_view question, const Vocab& vocab,
                                   std::size_t max_seq_len, std::size_t reserve) {
  std::vector<TokenId> ids = prompt_ids(context, question, vocab);
  check_length(id, ids.size() + reserve, max_seq_len);
  return ids;
}

EncodedSequence encode_sequence(std::string_view id, std::string_view context,
                                std::string_view question, std::string_view answer,
                                const Vocab& vocab, std::size_t max_seq_len) {
  EncodedSequence seq;
  seq.example_id = std::string(id);
  seq.ids = prompt_ids(context, question, vocab);
  seq.answer_begin = seq.ids.size();
  for (TokenId t : vocab.encode(answer)) seq.ids.push_back(t);
  seq.ids.push_back(kEosId);
  seq.answer_end = seq.ids.size();
  check_length(id, seq.ids.size(), max_seq_len);
  return seq;
}

EncodedSequence encode_training_sequence(const QAExample& example, const Vocab& vocab,
                                         std::size_t max_seq_len) {
  return encode_sequence(example.id, example.context, example.question, example.answer, vocab,
                         max_seq_len);
}

EncodedSequence encode_training_sequence(const SubstitutedExample& example, const Vocab& vocab,
                                         std::size_t max_seq_len) {
  return encode_sequence(example.base.id, example.context_sub, example.base.question,
                         example.answer_sub, vocab, max_seq_len);
}

}  // namespace kcef::corpus
