#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace monotraj::cli {

/// Runs one CLI invocation. `args` excludes the program name. Returns the
/// process exit status; errors are reported on `err` as a single line
/// "error: <code>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace monotraj::cli
