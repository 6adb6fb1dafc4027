#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sugctl {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFatal = 1;
inline constexpr int kQuarantined = 2;

/// Runs one command line. `args` excludes the program name. Data documents
/// go to `out` (or --out), summaries and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sugctl
