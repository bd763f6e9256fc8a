#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aiio::cli {

/// Runs one subcommand (simulate, identify, train, run, evaluate, plot).
/// `args` excludes the program name. Returns the process exit code; output
/// files are only created when the command succeeds.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aiio::cli
