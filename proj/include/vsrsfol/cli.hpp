#pragma once

// Command-line front end. Logic lives here so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vsrsfol {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Stable exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,      // anything not covered below
  kExitBadInput = 2,     // unreadable file, malformed JSON, bad flag or enum value
  kExitDimMismatch = 3,  // vector dimensions disagree or are unusable
  kExitRuleParse = 4,    // rule file syntax error (line/column on stderr)
};

// args excludes the program name. Data summaries go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace vsrsfol
