#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gpreg::cli {

/// Exit codes are part of the interface.
enum Exit : int { Ok = 0, VerifyFailed = 1, Usage = 2, Runtime = 3 };

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gpreg::cli
