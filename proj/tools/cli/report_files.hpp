// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

namespace kcef::cli {

// Writes <out_dir>/report.json and <out_dir>/report.txt, creating out_dir if
// needed. Each file is replaced atomically; `before_commit` runs before each
// rename and exists for crash-injection tests. Throws Error when the directory
// is not writable.
void emit_report(const std::filesystem::path& out_dir, const nlohmann::json& report,
                 const std::string& text, const std::function<void()>& before_commit = {});

}  // namespace kcef::cli
