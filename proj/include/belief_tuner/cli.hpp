#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace belief_tuner {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // validation failure, impossible evidence, nothing enforces
  kExitUsage = 2,    // bad flags, unparsable or unknown names, bad numeric ranges
};

/// Runs the tool on `args` (without the program name).  Results go to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace belief_tuner
