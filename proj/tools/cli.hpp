#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rankinfer {

/// Exit codes: 0 success, 2 input error or bad usage, 3 numerical or model failure.
int run_cli(int argc, char** argv);
/// Same as above with the arguments after the program name and explicit streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rankinfer
