#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qut::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDomain = 3,
  kRefit = 4,
};

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Human-readable output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qut::cli
