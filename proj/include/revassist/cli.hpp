#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace revassist {

/// Runs one `revassist` invocation. `args` excludes the program name. Data
/// goes to `out` and diagnostics to `err`. Returns 0 on success, 1 on a
/// usage error and 2 when the command itself fails.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace revassist
