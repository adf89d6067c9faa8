// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli/app.hpp"

int main(int argc, char** argv) { return kcef::cli::parse_and_run(argc, argv, std::cout, std::cerr); }
