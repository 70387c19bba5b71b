#pragma once

#include <iosfwd>

namespace cosod::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `cosod` command. Returns the process exit code:
/// 0 success, 1 configuration/runtime failure or failed groups, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cosod::cli
