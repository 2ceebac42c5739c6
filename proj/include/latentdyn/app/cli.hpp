#pragma once

#include <ostream>

namespace latentdyn::app {

/// Exit codes: 0 success, 1 usage (including a missing input file),
/// 2 config/data validation, 3 numerical failure, 4 a theory check failed.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace latentdyn::app
