#pragma once

#include <ostream>

namespace fbcool::cli {

enum ExitCode : int {
    ok = 0,
    other_error = 1,
    config_error = 2,
    simulation_unstable = 3,
    fit_failed = 4,
};

/// Entry point behind the fbcool executable. Writes progress to `out`,
/// diagnostics to `err`, and returns one of ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fbcool::cli
