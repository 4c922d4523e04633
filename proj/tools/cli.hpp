#pragma once

#include <iosfwd>

namespace harvest::cli {

/// Entry point of harvestctl. Writes results to `out` and diagnostics to
/// `err`; returns the process exit code. HARVEST_CONFIG, HARVEST_BIND and
/// HARVEST_STORE take precedence over --config, --bind and --store.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace harvest::cli
