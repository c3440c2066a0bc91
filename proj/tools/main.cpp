// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return nfps::cli::run(argc, argv); }
