#pragma once
// Experiment driver: turn a parsed spec into result files.  Every run writes
// <out>.csv with the primary table, <out>.jsonl with per-trajectory jump
// records for stochastic kinds, and <out>.manifest.json (written last) with
// the resolved config echo, digests of the other outputs, warnings, and
// timing, so a finished run is recognizable and reproducible.

#include <string>
#include <vector>

#include "capsim/config.hpp"
#include "capsim/io.hpp"

namespace capsim {

struct RunOutcome {
  std::vector<OutputFile> files;  // data files first, manifest last
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

// Execute the experiment described by `spec`, writing outputs under
// spec.out_prefix (which must be nonempty).  On an execution error a manifest
// with status "failed" is still written before the exception propagates.
RunOutcome run_experiment(const ExperimentSpec& spec);

}  // namespace capsim
