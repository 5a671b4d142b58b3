#pragma once

#include <string>
#include <vector>

namespace klsure::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Runs the command line `args` (without the program name). Messages go to
/// stdout and errors to stderr; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace klsure::cli
