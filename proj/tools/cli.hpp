#pragma once

#include <iosfwd>

namespace pathxai::cli {

/// Process exit codes. On failure a single line
/// `error: <category>: <message>` is written to the error stream.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,      // category "internal"
  kUsage = 2,         // "usage": unknown flag, bad value, missing subcommand
  kMissingInput = 3,  // "missing-input": an input path does not exist
  kConfig = 4,        // "config": config or record file failed to parse
  kData = 5,          // "data": unreadable or invalid input content
  kDiverged = 6,      // "diverged": training produced a non-finite loss
};

/// Entry point shared by the executable and the tests. Subcommands:
/// generate, train, evaluate, explain, stats, audit.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pathxai::cli
