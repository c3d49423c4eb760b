#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace autoar {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

/// Runs the `autoar` command line (argv[0] is the program name). Results go
/// to `out`, progress and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace autoar
