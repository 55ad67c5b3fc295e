#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace refactorkit::cli {

/// 0 success, 1 completed with unresolved tasks or failures, 2 usage or config error.
enum ExitStatus : int { kOk = 0, kUnresolved = 1, kUsage = 2 };

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refactorkit::cli
