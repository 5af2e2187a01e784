#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psrl {

/// Batch front-end. Exit codes: 0 success, 1 configuration error, 2 runtime error.
int cli_main(int argc, char** argv);
/// `args[0]` is the program name. Normal output goes to `out`.
int cli_main(const std::vector<std::string>& args, std::ostream& out);

}  // namespace psrl
