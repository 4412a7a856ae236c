#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kvm::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kInputError = 1, kVerificationFailed = 2 };

/// Runs one invocation; args excludes the program name. Summaries that have
/// no --out-summary path go to out; diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kvm::cli
