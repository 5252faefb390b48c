#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tam::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitInternal = 4;

// Runs the command line `args` (args[0] is the program name). Normal output
// goes to `out` unless --output redirects it; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tam::cli
