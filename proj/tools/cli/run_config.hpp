// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "kcef/erasure/adapter_set.hpp"
#include "kcef/model/config.hpp"
#include "kcef/model/training.hpp"
#include "kcef/pipeline/data.hpp"
#include "kcef/pipeline/stages.hpp"

namespace kcef::cli {

struct VictimConfig {
  model::TrainConfig train;
  std::size_t eval_every = 10;
};

struct EraseConfig {
  erasure::AdapterConfig adapter;
  pipeline::SplitSpec split;
  model::TrainConfig train;
};

struct PathConfig {
  std::string dataset = "data/dataset.jsonl";
  std::string substituted;  // empty: "<dataset stem>.substituted.jsonl" beside dataset
  std::string checkpoint = "victim/victim.ckpt";
  std::string memorized = "probe/memorized.jsonl";
  std::string victim_dir = "victim";
  std::string probe_dir = "probe";
  std::string erase_dir = "erase";

  std::string substituted_path() const;
};

// Every tunable of a run. Reports embed the resolved value so a run can be
// repeated from its report alone.
struct RunConfig {
  pipeline::CorpusConfig data;
  model::ModelConfig model;
  VictimConfig victim;
  pipeline::ProbeConfig probe;
  EraseConfig erase;
  PathConfig paths;
};

// Stage defaults for the desk-scale experiment.
RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& config);
// Starts from `defaults` and overwrites only the keys present. Unknown keys
// and mistyped values throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig defaults = default_run_config());
// Throws ConfigError if the file cannot be read or parsed.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace kcef::cli
