// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace kcef {

using TokenId = std::int32_t;

}  // namespace kcef
