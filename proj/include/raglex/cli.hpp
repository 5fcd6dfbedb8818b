#pragma once

#include <string>
#include <vector>

namespace raglex {

/// Entry point behind main(). args excludes the program name. Returns 0 on
/// success, 1 on runtime failure, 2 on usage errors.
int run_cli(const std::vector<std::string>& args);

} // namespace raglex
