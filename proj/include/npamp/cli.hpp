#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace npamp {

/// Entry point of the `npamp` tool. Returns 0 on success, 1 on invalid
/// input or usage, 2 on numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace npamp
