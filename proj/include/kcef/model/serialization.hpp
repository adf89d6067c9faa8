// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// JSON forms of the configuration structs. Parsing starts from `defaults`,
// overrides the keys that are present and rejects unknown keys or values of
// the wrong type with ConfigError.

#pragma once

#include <json.hpp>

#include "kcef/erasure/adapter_set.hpp"
#include "kcef/model/config.hpp"
#include "kcef/model/training.hpp"

namespace kcef::model {

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults = {});

nlohmann::json to_json(const erasure::AdapterConfig& config);
erasure::AdapterConfig adapter_config_from_json(const nlohmann::json& j,
                                                erasure::AdapterConfig defaults = {});

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

}  // namespace kcef::model
