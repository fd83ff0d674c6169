#pragma once

#include <string>
#include <vector>

namespace doalab::cli {

// Command-line entry point; args exclude the program name. Returns the
// process exit code: 0 ok, 2 usage, 3 bad config, 4 missing file, 5 runtime.
int run(std::vector<std::string> args);

}  // namespace doalab::cli
