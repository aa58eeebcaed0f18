#pragma once

// Batch driver behind the `mfg` executable.

#include "mfg/config.hpp"

#include <string>
#include <vector>

namespace mfg {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 1,
  exit_nonconvergence = 2,
  exit_certification_failed = 3,
};

/// Runs one validated configuration and writes its artifacts into
/// config.output_dir. Returns an ExitCode; diagnostics go to stderr.
int run(const RunConfig& config);

/// Full command line: `mfg <mode> --config <path> --out <dir> [options]`.
int cli_main(int argc, char** argv);

/// Saved solve output read back for certification.
struct SavedRun {
  Field x, m, u;
  std::vector<RegularizedSolution> stages;  ///< m and u_hat only, decreasing eps
};

/// Reads fields.csv and (if present) stages.csv from dir. Throws InputError.
SavedRun load_run(const std::string& dir);

}  // namespace mfg
