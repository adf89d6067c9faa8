// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace kcef {

// Writes `content` to a temporary sibling of `path` and renames it into place,
// so readers see either the old file or the complete new one. If
// `before_commit` throws, the temporary is removed and `path` is untouched.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void()>& before_commit = {});

// Throws Error if the file cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace kcef
