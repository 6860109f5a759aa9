#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace voxrecon::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kDivergence = 3 };

/// Runs the command-line tool with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace voxrecon::cli
