#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nvecho {

/// Exit codes: 0 success, 1 runtime or config failure, 2 usage error.
int cli_dispatch(int argc, const char* const* argv);
/// `args` excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nvecho
