#pragma once

// Command-line front end.  Exit codes: 0 success, 1 numerical failure,
// 2 assumption violation, 3 configuration error, 4 inconsistent box,
// 5 unsupported feature.

#include <iosfwd>

#include "qpencil/types.hpp"

namespace qpencil {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitAssumption = 2,
  kExitConfig = 3,
  kExitInconsistentBox = 4,
  kExitUnsupported = 5,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Runs one subcommand (check, count, curves, box, oracle); JSON goes to out,
/// diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qpencil
