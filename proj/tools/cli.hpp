#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stab360::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kMissingFile = 2;
inline constexpr int kValidationFailure = 3;
inline constexpr int kSolverFailure = 4;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stab360::cli
