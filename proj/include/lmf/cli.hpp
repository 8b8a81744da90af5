#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lmf::cli {

// Runs the command line `args` (without the program name). Progress and
// errors go to `err`; returns 0 on success, 1 for invalid input and 2 for a
// numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace lmf::cli
