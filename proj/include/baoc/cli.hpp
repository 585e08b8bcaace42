#pragma once

#include <ostream>

namespace baoc {

/// Exit codes: 0 success/optimal, 1 input error, 2 infeasible or failed verification.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInfeasible = 2;

/// Runs one `baoc` command line. Data goes to `out`, logs and errors to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace baoc
