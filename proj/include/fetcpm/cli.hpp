#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fetcpm {

inline constexpr int kExitNoChange = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitChange = 2;

/// Runs the command line `args` (without the program name). Results go to
/// `out`, diagnostics to `err`; "-" as a file name means `in` or `out`.
/// Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace fetcpm
