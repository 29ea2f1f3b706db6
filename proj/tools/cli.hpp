#pragma once

#include <iosfwd>

namespace sepvar::cli {

enum ExitCode { kOk = 0, kSolverFailure = 1, kUsage = 2 };

/// `sepvar generate|fit|bench ...`. Normal output goes to `out`, usage
/// messages to `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sepvar::cli
