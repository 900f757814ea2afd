#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blobkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the command line tool. `args` excludes the program name. Machine
/// output goes to `out`, diagnostics to `err`; `in` backs the "-" path.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace blobkit
