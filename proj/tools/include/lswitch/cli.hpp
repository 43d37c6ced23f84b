#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lswitch {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kMissingArtifact = 3,
    kValidationFailed = 4,
    kInternalError = 5,
};

/// Runs the command line `args` (without the program name). Messages go to
/// `out` and `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lswitch
