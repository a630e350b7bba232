#pragma once

#include <ostream>

namespace sepsis {

/// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sepsis
