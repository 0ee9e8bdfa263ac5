#pragma once

#include <string>

namespace risopt {

/// "<semver>+<git revision>", fixed at configure time.
std::string software_version();

}  // namespace risopt
