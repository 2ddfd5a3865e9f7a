#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bentcable {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,     ///< numerical or other runtime failure
  kExitValidation = 2,  ///< missing file, bad input or bad flags
};

/// Runs the `bentcable` command line with the given arguments (argv[0]
/// excluded). Normal output goes to `out`; failures print a one-line JSON
/// object {"error": {"type", "message"}} to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bentcable
