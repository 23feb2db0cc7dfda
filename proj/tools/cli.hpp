#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace objauth::cli {

/// Runs the `objauth` command line. `args` excludes the program name.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace objauth::cli
