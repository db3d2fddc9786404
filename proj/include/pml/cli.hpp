#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pml::cli {

/// Exit codes: 0 success, 1 usage error, 2 invalid input or a failed check
/// (gradient tolerance exceeded, theorem violation).
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFailure = 2;

/// Runs one command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pml::cli
