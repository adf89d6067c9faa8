// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/serialization.hpp"

#include <initializer_list>
#include <string>

#include "kcef/util/errors.hpp"

namespace kcef::model {

using nlohmann::json;

namespace {

void require_object(const json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError(std::string("unknown key '") + key + "' in " + what);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_same_v<T, double>) {
    if (!it->is_number()) throw ConfigError(std::string(what) + "." + key + " must be a number");
    out = it->get<double>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(std::string(what) + "." + key + " must be a string");
    out = it->get<std::string>();
  } else {
    if (!it->is_number_unsigned()) {
      throw ConfigError(std::string(what) + "." + key + " must be a non-negative integer");
    }
    out = it->get<T>();
  }
}

}  // namespace

json to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
              {"n_layers", c.n_layers},     {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},             {"max_seq_len", c.max_seq_len},
              {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  const char* what = "model";
  require_object(j, what,
                 {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_seq_len", "seed"});
  read(j, "vocab_size", c.vocab_size, what);
  read(j, "d_model", c.d_model, what);
  read(j, "n_layers", c.n_layers, what);
  read(j, "n_heads", c.n_heads, what);
  read(j, "d_ff", c.d_ff, what);
  read(j, "max_seq_len", c.max_seq_len, what);
  read(j, "seed", c.seed, what);
  return c;
}

json to_json(const erasure::AdapterConfig& c) {
  return json{{"kind", std::string(erasure::to_string(c.kind))},
              {"bottleneck_dim", c.bottleneck_dim},
              {"prefix_len", c.prefix_len},
              {"init_std", c.init_std},
              {"seed", c.seed}};
}

erasure::AdapterConfig adapter_config_from_json(const json& j, erasure::AdapterConfig c) {
  const char* what = "adapter";
  require_object(j, what, {"kind", "bottleneck_dim", "prefix_len", "init_std", "seed"});
  std::string kind(erasure::to_string(c.kind));
  read(j, "kind", kind, what);
  c.kind = erasure::parse_adapter_kind(kind);
  read(j, "bottleneck_dim", c.bottleneck_dim, what);
  read(j, "prefix_len", c.prefix_len, what);
  read(j, "init_std", c.init_std, what);
  read(j, "seed", c.seed, what);
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},       {"batch_size", c.batch_size},
              {"lr", c.adam.lr},          {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},    {"eps", c.adam.eps},
              {"shuffle_seed", c.shuffle_seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  const char* what = "train";
  require_object(j, what, {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "shuffle_seed"});
  read(j, "epochs", c.epochs, what);
  read(j, "batch_size", c.batch_size, what);
  read(j, "lr", c.adam.lr, what);
  read(j, "beta1", c.adam.beta1, what);
  read(j, "beta2", c.adam.beta2, what);
  read(j, "eps", c.adam.eps, what);
  read(j, "shuffle_seed", c.shuffle_seed, what);
  return c;
}

}  // namespace kcef::model
