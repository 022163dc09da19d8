#pragma once

#include <string>
#include <vector>

namespace hubreg {

// Entry point behind main(). Exit codes: 0 success, 1 usage/config error,
// 2 numerical failure, 3 bound violation.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);  // args without the program name

}  // namespace hubreg
