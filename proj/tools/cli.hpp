#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afecnn::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitConfig = 3,
};

/// Runs one `afecnn` invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afecnn::tools
