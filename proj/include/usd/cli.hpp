#pragma once
// Command-line surface: decode, eval, compare, sweep, synth.
//
// Exit codes: 0 success, 1 usage error, 2 data validation error,
// 3 internal invariant violation.

#include <iosfwd>
#include <string>
#include <vector>

namespace usd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usd::cli
