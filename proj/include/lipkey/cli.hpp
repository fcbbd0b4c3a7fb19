#pragma once

#include <iosfwd>

namespace lipkey {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessing = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `lipkey` tool. Results go to out, messages to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lipkey
