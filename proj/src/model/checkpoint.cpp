// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "kcef/model/serialization.hpp"
#include "kcef/util/atomic_file.hpp"

namespace kcef::model {

using nlohmann::json;
using Code = CheckpointError::Code;

namespace {

constexpr char kMagic[4] = {'K', 'C', 'E', 'F'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

json manifest(const std::vector<NamedTensor<float>>& named) {
  json list = json::array();
  for (const auto& n : named) list.push_back({{"name", n.name}, {"shape", n.tensor.shape()}});
  return list;
}

void check_manifest(const json& actual, const std::vector<NamedTensor<float>>& expected,
                    const char* what) {
  if (!actual.is_array() || actual.size() != expected.size()) {
    throw CheckpointError(Code::kManifestMismatch,
                          std::string(what) + " manifest does not match the recorded config");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const json& entry = actual[i];
    if (!entry.is_object() || entry.value("name", std::string()) != expected[i].name ||
        !entry.contains("shape") || entry["shape"] != json(expected[i].tensor.shape())) {
      throw CheckpointError(Code::kManifestMismatch,
                            std::string(what) + " manifest entry " + std::to_string(i) +
                                " does not match expected " + expected[i].name + " " +
                                ad::to_string(expected[i].tensor.shape()));
    }
  }
}

void require_finite(const std::vector<NamedTensor<float>>& named) {
  for (const auto& n : named) {
    for (float v : n.tensor.data()) {
      if (!std::isfinite(v)) {
        throw CheckpointError(Code::kNonFinite, "parameter " + n.name + " has a non-finite value");
      }
    }
  }
}

}  // namespace

std::string serialize_checkpoint(const TransformerLM<float>& model,
                                 const erasure::AdapterSet<float>* adapters,
                                 std::span<const std::string> vocab) {
  std::vector<NamedTensor<float>> named = model.named_parameters();
  json header{{"config", to_json(model.config)}, {"parameters", manifest(named)}};
  if (adapters != nullptr) {
    const auto adapter_named = adapters->named_parameters();
    header["adapters"] = {{"config", to_json(adapters->config)},
                          {"parameters", manifest(adapter_named)}};
    named.insert(named.end(), adapter_named.begin(), adapter_named.end());
  } else {
    header["adapters"] = nullptr;
  }
  header["vocab"] = std::vector<std::string>(vocab.begin(), vocab.end());
  require_finite(named);

  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& n : named) {
    for (float v : n.tensor.data()) put_f32(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(Code::kBadMagic, "not a checkpoint (bad magic bytes)");
  }
  if (bytes.size() < 12) throw CheckpointError(Code::kLengthMismatch, "checkpoint truncated in preamble");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(Code::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                                      ", expected " +
                                                      std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_len = get_u32(bytes, 8);
  if (bytes.size() - 12 < header_len) {
    throw CheckpointError(Code::kLengthMismatch, "checkpoint truncated inside the header");
  }

  json header;
  Checkpoint ck;
  try {
    header = json::parse(bytes.substr(12, header_len));
    if (!header.is_object() || !header.contains("config") || !header.contains("parameters") ||
        !header.contains("adapters") || !header.contains("vocab")) {
      throw CheckpointError(Code::kBadHeader, "checkpoint header is missing required keys");
    }
    if (header["config"].size() != to_json(ModelConfig{}).size()) {
      throw CheckpointError(Code::kBadHeader, "checkpoint config is incomplete");
    }
    ck.model = allocate_model<float>(model_config_from_json(header["config"]));
    ck.vocab = header["vocab"].get<std::vector<std::string>>();
    if (!header["adapters"].is_null()) {
      const json& a = header["adapters"];
      ck.adapters = erasure::allocate_adapters<float>(adapter_config_from_json(a.at("config")),
                                                      ck.model.config.n_layers,
                                                      ck.model.config.d_model);
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(Code::kBadHeader, std::string("malformed checkpoint header: ") + e.what());
  }

  std::vector<NamedTensor<float>> named = ck.model.named_parameters();
  check_manifest(header["parameters"], named, "parameter");
  if (ck.adapters) {
    const auto adapter_named = ck.adapters->named_parameters();
    check_manifest(header["adapters"]["parameters"], adapter_named, "adapter");
    named.insert(named.end(), adapter_named.begin(), adapter_named.end());
  }

  std::size_t total = 0;
  for (const auto& n : named) total += n.tensor.size();
  const std::size_t blob_bytes = bytes.size() - 12 - header_len;
  if (blob_bytes != total * 4) {
    throw CheckpointError(Code::kLengthMismatch,
                          "checkpoint holds " + std::to_string(blob_bytes) +
                              " parameter bytes, manifest needs " + std::to_string(total * 4));
  }
  std::size_t at = 12 + header_len;
  for (auto& n : named) {
    for (float& v : n.tensor.data()) {
      v = std::bit_cast<float>(get_u32(bytes, at));
      at += 4;
    }
  }
  require_finite(named);
  if (ck.model.parameter_count() != parameter_count(ck.model.config)) {
    throw CheckpointError(Code::kManifestMismatch, "parameter count disagrees with the config");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const TransformerLM<float>& model,
                     const erasure::AdapterSet<float>* adapters,
                     std::span<const std::string> vocab) {
  const std::string bytes = serialize_checkpoint(model, adapters, vocab);
  try {
    write_file_atomic(path, bytes);
  } catch (const Error& e) {
    throw CheckpointError(Code::kIo, e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw CheckpointError(Code::kIo, e.what());
  }
  try {
    return parse_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace kcef::model
