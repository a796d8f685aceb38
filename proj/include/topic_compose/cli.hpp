#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace topic_compose {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the `topic_compose` command line. `args` excludes the
/// program name. Runtime failures are reported on `err` as a single line
/// "error: <subcommand>: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topic_compose
