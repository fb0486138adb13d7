// cli.hpp
//
// The gmmdiag command-line front end, callable in-process.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gmmdiag::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitFit = 3,
};

// args[0] is the program name. Results go to `out`, diagnostics and
// progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmmdiag::cli
