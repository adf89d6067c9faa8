// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace kcef::model {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t max_seq_len = 64;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Closed-form count, computed without building a model.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace kcef::model
