#pragma once

#include <string>
#include <vector>

namespace centra {

// Full command-line entry point (args[0] is the program name). Returns the
// process exit code: 0 success, 2 usage/config error, 3 data/format error,
// 4 numerical error. Never throws.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace centra
