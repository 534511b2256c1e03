#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace codi::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInputFormat = 2, kValidation = 3 };

/// Runs one `codi` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codi::cli
