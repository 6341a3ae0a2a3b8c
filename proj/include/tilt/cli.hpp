#pragma once

#include <string>
#include <vector>

namespace tilt {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitAuditFailure = 1,
  kExitUsage = 2,
  kExitOptimizerAbort = 3,
};

/// Runs `tilt-rectify` with args[0] as the subcommand.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string& path);

}  // namespace tilt
