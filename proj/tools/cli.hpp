// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace nfps::cli {

/// Exit codes: 0 success, 1 domain error (one stderr line starting with "nfps-error:"), 2 usage error.
int run(int argc, char** argv);

}  // namespace nfps::cli
