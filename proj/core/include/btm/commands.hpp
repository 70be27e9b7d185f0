#pragma once

#include <filesystem>
#include <string>

#include "btm/runconfig.hpp"

namespace btm {

// Shared state for one CLI invocation. Commands return 0 on success and
// throw: ConfigError for usage/config problems (exit 2), anything else is a
// runtime failure (exit 1).
struct CommandContext {
  RunConfig config;
  std::filesystem::path out_dir = "runs/default";
  int jobs = 1;
  bool quiet = false;
};

int cmd_gen_data(const CommandContext& ctx);
int cmd_train_experts(const CommandContext& ctx);
int cmd_fit_bezier(const CommandContext& ctx);
int cmd_condense(const CommandContext& ctx);
int cmd_evaluate(const CommandContext& ctx);
int cmd_report_storage(const CommandContext& ctx);
int cmd_theory_report(const CommandContext& ctx);

// Maps a command name to its implementation; throws ConfigError for unknown
// names. Used by the CLI front end and by in-process tests.
int run_command(const std::string& name, const CommandContext& ctx);

}  // namespace btm
