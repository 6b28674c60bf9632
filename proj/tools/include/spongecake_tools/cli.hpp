#pragma once

#include <ostream>

namespace spongecake::tools {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitNumerical = 4 };

/// Entry point of the `spongecake` command line; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spongecake::tools
