// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/vocab.hpp"

#include <array>
#include <cctype>

#include "kcef/util/errors.hpp"

namespace kcef::corpus {

namespace {

constexpr std::array<std::string_view, kNumReserved> kReserved = {"<pad>", "<unk>", "<bos>",
                                                                  "<sep>", "<eos>"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      current += c;
    }
  }
  flush();
  return out;
}

std::string normalize(std::string_view text) {
  std::string out;
  for (const std::string& tok : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

bool exact_match(std::string_view prediction, std::string_view gold) {
  return collapse_whitespace(prediction) == collapse_whitespace(gold);
}

Vocab Vocab::build(std::span<const std::string> texts) {
  if (texts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::vector<std::string> tokens(kReserved.begin(), kReserved.end());
  std::unordered_map<std::string, TokenId> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) seen.emplace(tokens[i], static_cast<TokenId>(i));
  for (const std::string& text : texts) {
    for (std::string& tok : tokenize(text)) {
      if (seen.emplace(tok, static_cast<TokenId>(tokens.size())).second) {
        tokens.push_back(std::move(tok));
      }
    }
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReserved.size()) throw DataError("vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < kReserved.size(); ++i) {
    if (tokens[i] != kReserved[i]) {
      throw DataError("vocabulary id " + std::to_string(i) + " must be " + std::string(kReserved[i]));
    }
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (const std::string& tok : tokenize(text)) {
    auto it = ids_.find(tok);
    out.push_back(it == ids_.end() ? kUnkId : it->second);
  }
  return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                    std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

}  // namespace kcef::corpus
