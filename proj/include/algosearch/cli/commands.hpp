#pragma once

// The `algosearch` command line: init, run, resume, report, toy, render.
//
// Exit codes: 0 clean completion or early stop, 2 invalid input or
// configuration, 3 runtime failure or aborted session.

#include <iosfwd>

namespace algosearch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitAbort = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace algosearch::cli
