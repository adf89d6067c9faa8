// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout:
//   "KCEF" | u32 LE version | u32 LE header length | JSON header | f32 LE blobs
// The header is {config, parameters: [{name, shape}], adapters: null |
// {config, parameters}, vocab: [token, ...]}. Blobs follow in manifest order,
// base parameters first, then adapter parameters.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcef/model/transformer.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Code {
    kIo,
    kBadMagic,
    kVersionMismatch,
    kBadHeader,
    kManifestMismatch,
    kLengthMismatch,
    kNonFinite,
  };

  CheckpointError(Code code, const std::string& message) : Error(message), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct Checkpoint {
  TransformerLM<float> model;
  std::optional<erasure::AdapterSet<float>> adapters;
  std::vector<std::string> vocab;
};

std::string serialize_checkpoint(const TransformerLM<float>& model,
                                 const erasure::AdapterSet<float>* adapters,
                                 std::span<const std::string> vocab);
Checkpoint parse_checkpoint(std::string_view bytes);

// Written atomically. Throws CheckpointError(kNonFinite) rather than persist a
// NaN or Inf.
void save_checkpoint(const std::filesystem::path& path, const TransformerLM<float>& model,
                     const erasure::AdapterSet<float>* adapters,
                     std::span<const std::string> vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kcef::model
