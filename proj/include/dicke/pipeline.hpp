#pragma once

#include <iosfwd>

#include "dicke/cli_config.hpp"

namespace dicke {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

/// Runs one subcommand, writing its CSV files and run_config.json into
/// cfg.out_dir (the entropy subcommand prints JSON to `out` instead).
/// Returns kExitPartial when results are incomplete, such as passage gaps or
/// ill-conditioned landscape cells. Errors propagate as exceptions.
int run_pipeline(const RunConfig& cfg, std::ostream& out, std::ostream& log);

}  // namespace dicke
