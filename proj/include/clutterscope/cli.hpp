#pragma once

#include <iosfwd>

namespace clutterscope {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitBadInput = 2;

/// Entry point behind the `clutterscope` executable. Output goes to `out` (or
/// to the --out file) only after the command succeeded.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clutterscope
