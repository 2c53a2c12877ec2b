#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wgl::cli {

// Runs the command line. Results go to out (or --out), diagnostics to err.
// Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace wgl::cli
