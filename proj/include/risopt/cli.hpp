#pragma once

#include "risopt/validation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace risopt::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,      // unreadable config, bad flags or values
  kRuntimeError = 2,     // work could not be completed
  kPartial = 3,          // sweep completed but some points were masked or failed
  kValidationFailed = 4  // an oracle check exceeded its tolerance
};

/// Directory used when --out is not given: $RISOPT_OUT_DIR, else "risopt_out".
std::string default_output_dir();

/// Entry point of the `risopt` binary. `hooks` replaces the gradients used
/// by the validate subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const ValidationHooks& hooks = {});

}  // namespace risopt::cli
