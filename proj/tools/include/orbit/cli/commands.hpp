#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "orbit/cli/config.hpp"
#include "orbit/cli/report.hpp"

namespace orbit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitVerdict = 3,
  kExitSolver = 4,
};

CommandOutput cmd_rank_table(const Json& cfg);
CommandOutput cmd_hessian_test(const Json& cfg);
CommandOutput cmd_count(const Json& cfg);
CommandOutput cmd_simulate(const Json& cfg);
CommandOutput cmd_estimate(const Json& cfg);
CommandOutput cmd_recover(const Json& cfg);
CommandOutput cmd_sigma_scaling(const Json& cfg);

/// Subcommand names in help order.
const std::vector<std::string>& command_names();

/// Maps a config `pipeline` value to a subcommand name.
std::string command_for_pipeline(const std::string& pipeline);

/// Dispatches on the subcommand name.
CommandOutput run_command(const std::string& command, const Json& cfg);

/// Files a resolved config reads (signal, samples, moments).
std::vector<std::string> input_files(const Json& cfg);

/// Full CLI: parse, resolve config, run, write outputs. Returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace orbit::cli
