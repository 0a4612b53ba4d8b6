#pragma once

#include <ostream>

namespace phm {

/// Entry point of the `phm` tool. Returns the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace phm
