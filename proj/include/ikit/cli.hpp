#pragma once

#include <iosfwd>

namespace ikit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitGuard = 2;

// Parses argv and runs one subcommand. Results go to the --out paths or to
// `out`; diagnostics go to `err` as single lines.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ikit
