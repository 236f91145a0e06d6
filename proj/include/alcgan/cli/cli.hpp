#pragma once

#include <iostream>

namespace alcgan::cli {

/// Runs one `alcgan` subcommand and returns the process exit code:
/// 0 on success (and for --help), 2 for usage errors, 1 when the operation
/// itself fails. Results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

} // namespace alcgan::cli
