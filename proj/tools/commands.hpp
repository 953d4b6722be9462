#pragma once

#include <string>
#include <vector>

namespace cli {

// Parses and runs one command line (without the program name); returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace cli
