#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mglgcp {

// Runs one command line (without the program name). Returns the exit code:
// 0 success, 2 input error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mglgcp
