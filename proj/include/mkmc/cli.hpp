#pragma once

#include <string>
#include <vector>

namespace mkmc::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kIo = 2,  ///< unreadable files, malformed content, bad arguments
  kDimension = 3,
  kNotPositiveDefinite = 4,
  kNumerical = 5,
};

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace mkmc::cli
