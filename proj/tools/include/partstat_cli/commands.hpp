#pragma once

#include <ostream>
#include <stdexcept>

namespace partstat::cli {

// Bad flag combination detected after parsing (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitChecksFailed = 1,  // verify: at least one check failed
  kExitUsage = 2,
  kExitDomain = 3,   // domain, validation, parse and ill-conditioned errors
  kExitNumeric = 4,  // range, numeric and budget errors
};

/// Parses argv, runs one subcommand and maps failures to exit codes. Tables go
/// to `out` (or --out), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace partstat::cli
