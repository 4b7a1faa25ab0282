#pragma once

#include <iostream>

namespace r2vpo {

// Subcommands: train, eval, verify-divergence, gradcheck, check-bound.
// Returns 0 on success, 1 when a check fails or a run aborts, 2 on usage or
// configuration errors.
int parse_and_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace r2vpo
