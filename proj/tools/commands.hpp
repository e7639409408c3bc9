#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ip2cp::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericalError = 3,
};

// Runs one command line (args[0] is the program name). Data goes to files or
// `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ip2cp::cli
