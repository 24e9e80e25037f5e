// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace raea::cli {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Gradient checks of the primitive ops and the full generator, plus
/// retrieval checks against a brute-force ranking.
std::vector<CheckResult> run_selftest();

/// Prints one line per check and the summary; returns true when all pass.
bool print_selftest(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace raea::cli
