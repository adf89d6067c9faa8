// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <span>
#include <string>

#include <json.hpp>

#include "kcef/pipeline/metrics.hpp"
#include "kcef/pipeline/stages.hpp"

namespace kcef::pipeline {

// The from_json functions are strict: missing or unknown keys and wrong types
// throw DataError.
nlohmann::json to_json(const VictimReport& report);
VictimReport victim_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MemorizationReport& report);
MemorizationReport memorization_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProbeReport& report);
ProbeReport probe_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ErasureReport& report);
ErasureReport erasure_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SplitSpec& spec);
SplitSpec split_spec_from_json(const nlohmann::json& j, SplitSpec defaults = {});

// One row per report:
//
//   adapter     accuracy on training set  accuracy on test set
//   bottleneck  92.1%                     92.9%
std::string render_accuracy_table(std::span<const ErasureReport> reports);

// {"id": ..., "prediction": ...} per line, in id order.
std::string predictions_to_jsonl(const AnswerMap& predictions);
// Throws DataError with the line number on malformed input or duplicate ids.
AnswerMap read_predictions(std::istream& in);

}  // namespace kcef::pipeline
