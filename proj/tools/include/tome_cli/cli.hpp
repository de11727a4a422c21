#pragma once

#include <ostream>

namespace tome::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the tome_bench binary: run, sweep and viz subcommands.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tome::cli
