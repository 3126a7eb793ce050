#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nobn::cli {

/// Exit codes: 0 success, 1 usage, 2 input or validation error, 3 resource cap.
enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kCap = 3 };

/// Runs `nobn <args...>` writing regular output to out and diagnostics to
/// err. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nobn::cli
