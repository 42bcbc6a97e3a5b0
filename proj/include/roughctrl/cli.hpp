#pragma once

namespace roughctrl {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `roughctrl` tool. Returns the process exit code:
///   0 success, 2 configuration error, 3 divergence or inversion failure,
///   4 monotonicity failure in policy iteration, 1 anything else.
int run_cli(int argc, const char* const* argv);

}  // namespace roughctrl
