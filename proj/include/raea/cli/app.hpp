// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace raea::cli {

/// Exit codes of the `raea` binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Parses argv, dispatches one subcommand and maps errors to exit codes.
/// Errors are written to `err` as "<kind>: <message>".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace raea::cli
