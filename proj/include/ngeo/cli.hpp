#pragma once

#include <iosfwd>

namespace ngeo {

enum ExitCode : int {
  kExitOk = 0,
  kExitAssertion = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

/// Parses argv, runs one subcommand and writes its outputs. Returns the
/// process exit code.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ngeo
