#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stripwet::cli {

/// Runs one subcommand. Returns 0 on success, 2 on invalid configuration and
/// 1 on runtime failure. Summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Formats a float with 12 significant digits.
std::string fmt(double x);

}  // namespace stripwet::cli
