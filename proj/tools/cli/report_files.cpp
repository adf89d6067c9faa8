// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/report_files.hpp"

#include <system_error>

#include "kcef/util/atomic_file.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::cli {

void emit_report(const std::filesystem::path& out_dir, const nlohmann::json& report,
                 const std::string& text, const std::function<void()>& before_commit) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create report directory " + out_dir.string() + ": " + ec.message());
  write_file_atomic(out_dir / "report.json", report.dump(2) + "\n", before_commit);
  write_file_atomic(out_dir / "report.txt", text, before_commit);
}

}  // namespace kcef::cli
