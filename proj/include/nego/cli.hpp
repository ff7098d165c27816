#pragma once

#include <string>
#include <vector>

namespace nego::cli {

/// Runs one subcommand (simulate | train | evaluate | sweep | presets).
/// Returns the process exit code: 0 success, 1 usage or configuration
/// error, 2 runtime failure.
int run(const std::vector<std::string>& args);

} // namespace nego::cli
