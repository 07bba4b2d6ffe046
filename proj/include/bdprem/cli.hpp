#pragma once

#include <iosfwd>

namespace bdprem {

/// Entry point of the command line tool. Returns the process exit code:
/// 0 success, 2 invalid input, 1 any other failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace bdprem
