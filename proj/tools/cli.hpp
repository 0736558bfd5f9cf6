#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jointplan::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNumerical = 3,
  kDivergence = 4,
  kEmptySuite = 5,
};

// Entry point behind the jointplan executable. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jointplan::cli
