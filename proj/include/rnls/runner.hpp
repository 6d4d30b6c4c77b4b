#pragma once

#include <string>

#include "rnls/config.hpp"
#include "rnls/kernels.hpp"

namespace rnls {

struct RunnerOptions {
    std::string output;  // overrides RunConfig::output when non-empty
    std::string resume;  // checkpoint to continue from (evolve only)
    kernels::Exec exec = kernels::Exec::parallel;
};

struct RunOutcome {
    std::string output_dir;
    std::string summary;  // text of summary.json
    double wall_seconds = 0.0;
    /// 0, or 3 when an evolution ended in lost resolution without a blowup verdict.
    int exit_code = 0;
};

/// Runs one experiment and writes into the output directory:
///   config.ini     effective configuration (re-parses to the same RunConfig)
///   summary.json   results and provenance; byte-identical for identical configs
///   timing.json    wall-clock times, kept apart so summaries stay reproducible
/// plus the kind-specific files listed in docs/schema.md.
RunOutcome run_experiment(const RunConfig& config, const RunnerOptions& options = {});

/// Exit code for an exception escaping run_experiment: 2 ConfigError,
/// 3 NumericalError, 4 IoError or filesystem failure, 1 otherwise.
int exit_code_for(const std::exception& e);

/// Project version baked in at build time.
const char* code_version();

}  // namespace rnls
