#pragma once

#include <iosfwd>

namespace cellseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Command-line front end: segment, classify, sweep, compare, synth and serve.
/// Returns the process exit code; normal output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cellseg
