#pragma once

#include <string>
#include <vector>

namespace quadmimic {

inline constexpr const char* kToolVersion = "0.1.0";

// Full command-line entry point. Exit codes: 0 success, 2 usage or
// validation failure, 3 numeric failure (diagnostic dump path printed).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace quadmimic
