#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace serls::app {

enum ExitCode { kExitOk = 0, kExitNumerical = 1, kExitData = 2 };

/// Runs the command line `args` (args[0] is the program name). Diagnostics
/// go to `err`, progress lines to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace serls::app
