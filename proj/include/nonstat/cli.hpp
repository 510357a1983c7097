#pragma once

#include <iosfwd>

namespace nonstat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/* Entry point of the `nonstat` command-line tool. Subcommands: sample,
   stats, eval, trace, train. Returns 0 on success, 1 on runtime failure
   and 2 on usage errors. */
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace nonstat
