#pragma once

#include <iosfwd>

namespace ubitriage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInconclusive = 3;

/// Runs the command line. Results go to `out`, progress and errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ubitriage::cli
