#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace maxinv::cli {

enum ExitCode : int { Ok = 0, UsageError = 1, ComputeError = 2 };

/// Runs the command line `args` (args[0] is the program name). Normal output
/// goes to `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maxinv::cli
