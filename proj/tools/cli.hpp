#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace uoivar::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

/// Invalid or unknown configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Environment variable that overrides the configured worker count.
inline constexpr const char* kThreadsEnv = "UOIVAR_THREADS";

/// Runs `uoivar <subcommand> ...`; args excludes the program name.
/// Diagnostics go to stderr; the return value is the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace uoivar::cli
