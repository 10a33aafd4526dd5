#pragma once

#include <string>
#include <vector>

namespace inpaint::cli {

/// Run one subcommand. Exit codes: 0 success, 1 usage error, 2 runtime
/// failure. Every successful run writes a manifest echoing the resolved
/// configuration under its --out-dir.
int dispatch(const std::vector<std::string>& args);

/// Registered gradient-verification suites (losses and model); returns true
/// if every suite passed. Lines are printed to the given stream.
bool run_gradcheck_suites(std::ostream& os);

}  // namespace inpaint::cli
