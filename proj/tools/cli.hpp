#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace slitscan::cli {

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code: 0 ok, 2 configuration, 3 data, 4 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace slitscan::cli
