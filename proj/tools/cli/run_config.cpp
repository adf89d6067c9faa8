// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "kcef/model/serialization.hpp"
#include "kcef/pipeline/reports.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + what);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) return;
  const std::string where = what + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(where + " must be a boolean");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!it->is_number()) throw ConfigError(where + " must be a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(where + " must be a string");
  } else {
    if (!it->is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
  }
  out = it->get<T>();
}

}  // namespace

std::string PathConfig::substituted_path() const {
  if (!substituted.empty()) return substituted;
  std::filesystem::path p(dataset);
  return (p.parent_path() / (p.stem().string() + ".substituted.jsonl")).string();
}

RunConfig default_run_config() {
  RunConfig c;
  c.model.vocab_size = 0;
  c.model.d_model = 64;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.d_ff = 128;
  c.model.max_seq_len = 64;
  c.model.seed = 1;

  c.victim.train.epochs = 40;
  c.victim.train.batch_size = 16;
  c.victim.train.adam.lr = 1e-3;
  c.victim.train.shuffle_seed = 1;
  c.victim.eval_every = 10;

  c.erase.adapter.kind = erasure::AdapterKind::kBottleneck;
  c.erase.adapter.bottleneck_dim = 16;
  c.erase.adapter.prefix_len = 8;
  c.erase.adapter.seed = 1;
  c.erase.split = {0.8, 1};
  c.erase.train.epochs = 30;
  c.erase.train.batch_size = 16;
  c.erase.train.adam.lr = 1e-2;
  c.erase.train.shuffle_seed = 1;
  return c;
}

json to_json(const RunConfig& c) {
  return json{
      {"data", {{"facts", c.data.facts}, {"distractor_rate", c.data.distractor_rate},
                {"seed", c.data.seed}}},
      {"model", model::to_json(c.model)},
      {"victim", {{"train", model::to_json(c.victim.train)}, {"eval_every", c.victim.eval_every}}},
      {"probe", {{"sample_size", c.probe.sample_size}, {"seed", c.probe.seed},
                 {"closed_book", c.probe.closed_book}, {"contains_match", c.probe.contains_match}}},
      {"erase", {{"adapter", model::to_json(c.erase.adapter)},
                 {"split", pipeline::to_json(c.erase.split)},
                 {"train", model::to_json(c.erase.train)}}},
      {"paths", {{"dataset", c.paths.dataset}, {"substituted", c.paths.substituted},
                 {"checkpoint", c.paths.checkpoint}, {"memorized", c.paths.memorized},
                 {"victim_dir", c.paths.victim_dir}, {"probe_dir", c.paths.probe_dir},
                 {"erase_dir", c.paths.erase_dir}}}};
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  check_keys(j, "config", {"data", "model", "victim", "probe", "erase", "paths"});
  if (auto it = j.find("data"); it != j.end()) {
    check_keys(*it, "data", {"facts", "distractor_rate", "seed"});
    read(*it, "facts", c.data.facts, "data");
    read(*it, "distractor_rate", c.data.distractor_rate, "data");
    read(*it, "seed", c.data.seed, "data");
  }
  if (auto it = j.find("model"); it != j.end()) c.model = model::model_config_from_json(*it, c.model);
  if (auto it = j.find("victim"); it != j.end()) {
    check_keys(*it, "victim", {"train", "eval_every"});
    if (auto t = it->find("train"); t != it->end()) {
      c.victim.train = model::train_config_from_json(*t, c.victim.train);
    }
    read(*it, "eval_every", c.victim.eval_every, "victim");
  }
  if (auto it = j.find("probe"); it != j.end()) {
    check_keys(*it, "probe", {"sample_size", "seed", "closed_book", "contains_match"});
    read(*it, "sample_size", c.probe.sample_size, "probe");
    read(*it, "seed", c.probe.seed, "probe");
    read(*it, "closed_book", c.probe.closed_book, "probe");
    read(*it, "contains_match", c.probe.contains_match, "probe");
  }
  if (auto it = j.find("erase"); it != j.end()) {
    check_keys(*it, "erase", {"adapter", "split", "train"});
    if (auto a = it->find("adapter"); a != it->end()) {
      c.erase.adapter = model::adapter_config_from_json(*a, c.erase.adapter);
    }
    if (auto s = it->find("split"); s != it->end()) {
      c.erase.split = pipeline::split_spec_from_json(*s, c.erase.split);
    }
    if (auto t = it->find("train"); t != it->end()) {
      c.erase.train = model::train_config_from_json(*t, c.erase.train);
    }
  }
  if (auto it = j.find("paths"); it != j.end()) {
    check_keys(*it, "paths", {"dataset", "substituted", "checkpoint", "memorized", "victim_dir",
                              "probe_dir", "erase_dir"});
    read(*it, "dataset", c.paths.dataset, "paths");
    read(*it, "substituted", c.paths.substituted, "paths");
    read(*it, "checkpoint", c.paths.checkpoint, "paths");
    read(*it, "memorized", c.paths.memorized, "paths");
    read(*it, "victim_dir", c.paths.victim_dir, "paths");
    read(*it, "probe_dir", c.paths.probe_dir, "paths");
    read(*it, "erase_dir", c.paths.erase_dir, "paths");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace kcef::cli
