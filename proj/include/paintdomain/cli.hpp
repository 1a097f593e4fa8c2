#pragma once

#include <string>
#include <vector>

namespace paintdomain {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses and runs one command. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace paintdomain
