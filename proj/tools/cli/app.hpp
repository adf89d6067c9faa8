// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace kcef::cli {

// Runs one subcommand (gen-data, train-victim, probe, erase, eval, report).
// Summaries go to `out`, progress and the one-line diagnostic on failure to
// `err`. Returns the process exit code.
int parse_and_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kcef::cli
