#pragma once

#include <ostream>

namespace cavsync {

// Entry point of the command-line tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cavsync
