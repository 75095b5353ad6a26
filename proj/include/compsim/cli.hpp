#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace compsim::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;      // parse or configuration failure
inline constexpr int kExitNumerics = 2;    // numerical failure
inline constexpr int kExitValidation = 3;  // system failed validation

/// Runs one CLI invocation. args excludes the program name.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace compsim::cli
