#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spmm {

/// Process exit codes of the command-line front-end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitDomain = 3,
};

/// Runs the `spmm` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spmm
