// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kcef/util/types.hpp"

namespace kcef::corpus {

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr TokenId kEosId = 4;
inline constexpr TokenId kNumReserved = 5;

// Splits on whitespace and detaches every ASCII punctuation character as its
// own token. "Hohner's nationality?" -> {"Hohner", "'", "s", "nationality", "?"}.
std::vector<std::string> tokenize(std::string_view text);

// Tokens joined by single spaces; the canonical form decode() produces.
std::string normalize(std::string_view text);

// Trims and collapses whitespace runs to single spaces.
std::string collapse_whitespace(std::string_view text);

// Case-sensitive equality after collapse_whitespace on both sides.
bool exact_match(std::string_view prediction, std::string_view gold);

class Vocab {
 public:
  // Reserved markers first, then corpus tokens in order of first occurrence.
  // Throws DataError on an empty corpus.
  static Vocab build(std::span<const std::string> texts);
  // Throws DataError unless the first five tokens are the reserved markers and
  // all tokens are distinct.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::vector<TokenId> encode(std::string_view text) const;
  // Reserved ids render as their markers ("<unk>", "<eos>", ...).
  std::string decode(std::span<const TokenId> ids) const;

  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace kcef::corpus
