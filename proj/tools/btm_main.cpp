#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "btm/commands.hpp"
#include "btm/runconfig.hpp"
#include "btm/version.hpp"

namespace {

const std::vector<std::string> kCommands = {
    "gen-data",     "train-experts", "fit-bezier",    "condense",
    "evaluate",     "report-storage", "theory-report"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bezier trajectory-matching dataset condensation pipeline"};
  app.set_version_flag("--version", btm::kToolVersion);
  app.require_subcommand(1);

  std::string config_file;
  std::string profile;
  std::string out_dir = "runs/default";
  std::vector<std::string> overrides;
  int jobs = 1;
  bool quiet = false;

  for (const auto& name : kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_file, "key = value run configuration file");
    sub->add_option("--profile", profile, "preset: desk (laptop scale) or full");
    sub->add_option("-o,--out", out_dir, "output directory for artifacts");
    sub->add_option("--set", overrides, "override a config key, e.g. --set condense.ipc=100");
    sub->add_option("-j,--jobs", jobs, "max parallel workers")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", quiet, "suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    btm::CommandContext ctx;
    if (!config_file.empty()) ctx.config = btm::RunConfig::from_file(config_file);
    if (!profile.empty()) ctx.config.apply_profile(profile);
    ctx.config.apply_env();
    for (const auto& kv : overrides) ctx.config.apply_override(kv);
    ctx.out_dir = out_dir;
    ctx.jobs = jobs;
    ctx.quiet = quiet;
    return btm::run_command(app.get_subcommands().front()->get_name(), ctx);
  } catch (const btm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
