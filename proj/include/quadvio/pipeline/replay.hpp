#pragma once

#include <vector>

#include "quadvio/pipeline/estimator_core.hpp"
#include "quadvio/sim/simulator.hpp"

namespace quadvio {

struct ReplayResult {
  std::vector<Estimate> trace;  // one entry per IMU sample
  EstimatorDiagnostics diagnostics;
  Ekf::Counters counters;
};

/// Single-threaded reference mode: all events in timestamp order, IMU before
/// the camera frame when they coincide. Canonical output for equivalence
/// tests against the threaded pipeline.
ReplayResult replay_log(const sim::SimLog& log, EstimatorCore core);

/// Filter state initialized from ground truth at t = 0 with zero bias
/// estimates, the standard way estimation runs are started here.
FilterState initial_state_from_truth(const sim::TruthSample& truth);

}  // namespace quadvio
