#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adaptmt::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kInvalidInput = 4,
  kCheckpoint = 5,
  kReplayMismatch = 6,
  kNumeric = 7,
};

// Runs one subcommand. `args` excludes the program name. Results go to
// `out`; the resolved configuration and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adaptmt::cli
