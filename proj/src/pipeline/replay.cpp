#include "quadvio/pipeline/replay.hpp"

namespace quadvio {

FilterState initial_state_from_truth(const sim::TruthSample& truth) {
  FilterState s;
  s.position = truth.position;
  s.attitude = truth.attitude;
  s.velocity_body = truth.velocity_body;
  s.accel_bias = Vec3::Zero();
  s.gyro_bias = Vec3::Zero();
  return s;
}

ReplayResult replay_log(const sim::SimLog& log, EstimatorCore core) {
  ReplayResult result;
  result.trace.reserve(log.imu.size());

  std::size_t fi = 0;
  for (const ImuSample& sample : log.imu) {
    result.trace.push_back(core.process_imu(sample));
    while (fi < log.frames.size() && log.frames[fi].t <= sample.t + 1e-12) {
      core.process_frame(log.frames[fi]);
      ++fi;
    }
  }
  // Frames after the last IMU sample are not representable in the trace.
  result.diagnostics = core.diagnostics();
  result.counters = core.ekf().counters();
  return result;
}

}  // namespace quadvio
