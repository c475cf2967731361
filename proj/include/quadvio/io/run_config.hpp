#pragma once

#include <optional>
#include <string>

#include "quadvio/ekf/filter.hpp"
#include "quadvio/keyframe/policy.hpp"
#include "quadvio/pipeline/fusion_pipeline.hpp"
#include "quadvio/pipeline/estimator_core.hpp"
#include "quadvio/sim/simulator.hpp"

namespace quadvio::io {

/// One flat key = value configuration covering the simulator, the estimator
/// and the key-frame policy. Parsing is strict: unknown keys are errors.
struct RunConfig {
  sim::SimConfig sim;
  NoiseParams noise;
  EkfParams ekf;
  InitialCovariance init_cov;
  KeyframePolicyConfig keyframe;
  PipelineConfig pipeline;
  EstimatorModes modes;

  std::string trajectory = "standard";  // standard | hover
  double duration = 0.0;                // s; 0 uses the trajectory length

  // Written into the resolved copy by `simulate` so evaluation can score the
  // bias estimates; absent in hand-written configs.
  std::optional<Vec3> true_accel_bias;
  std::optional<Vec3> true_gyro_bias;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text,
                               const std::string& origin = "<string>");

  /// Mirror the simulator's physical constants and sensor noise into the
  /// estimator blocks (the filter assumes the true noise covariances).
  void finalize();

  sim::Trajectory make_trajectory() const;
  double effective_duration() const;

  /// Serialize every key with its resolved value.
  std::string to_string() const;
  void write_file(const std::string& path) const;
};

}  // namespace quadvio::io
