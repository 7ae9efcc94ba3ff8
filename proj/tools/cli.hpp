#pragma once

#include <ostream>

namespace chunkalign::cli {

/// Runs one command line. Reports go to `out`, diagnostics to `err`.
/// Returns 0 on success and a nonzero code after any error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chunkalign::cli
