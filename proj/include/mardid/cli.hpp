#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mardid {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,       // usage, configuration, schema or consistency error
  kExitEstimation = 3,  // fitting or estimation failure
  kExitScenario = 4,    // a simulated scenario exceeded its failure budget
};

/// Runs the command line `args` (without the program name). Results go to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mardid
