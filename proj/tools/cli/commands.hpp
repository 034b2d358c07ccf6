// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace crash::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

struct CommandContext {
  Json config;
  std::filesystem::path out;
  std::filesystem::path data;
  std::vector<std::filesystem::path> checkpoints;
  bool force = false;
  std::ostream* log = nullptr;
};

void cmd_gen_data(const CommandContext& ctx);
void cmd_train(const CommandContext& ctx);
void cmd_eval(const CommandContext& ctx);
void cmd_bench(const CommandContext& ctx);

// Parses argv, runs the subcommand and maps failures to exit codes with a
// one-line diagnostic on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crash::cli
