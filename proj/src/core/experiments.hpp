// Experiment orchestration: a validated RunConfig in, CSV/JSON artifacts out.
// Every run writes a manifest.json recording the config hash, library
// version, seeds, and wall times; the numeric artifacts are deterministic
// for a fixed config (reduction orders are fixed and every random draw flows
// from the recorded seed), so re-running a config reproduces them byte for
// byte.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/gap_engine.hpp"
#include "core/run_config.hpp"
#include "core/tube_grid.hpp"

namespace gapflow {

// Grid, potential family, and (optionally) the verified gap around the
// target energy, resolved from a config the way every experiment does it.
struct ModelContext {
  std::shared_ptr<const TubeGrid> grid;
  DislocationFamily family;
  GapInterval gap;  // meaningful only when built with need_gap
  GapSpec spec;
};

ModelContext build_context(const RunConfig& config, bool need_gap);

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> outputs;  // paths of files written
  std::vector<std::string> log;      // one line per stage
};

// Dispatches on config.kind, writes artifacts under config.out_dir.
RunResult run_experiment(const RunConfig& config);

}  // namespace gapflow
