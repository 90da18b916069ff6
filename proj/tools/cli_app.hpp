#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fqc {

/// Full command-line entry point, factored out of main() so tests can drive
/// commands in-process. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fqc
