#pragma once

#include <atomic>
#include <cstdint>

#include "quadvio/ekf/filter.hpp"
#include "quadvio/keyframe/policy.hpp"

namespace quadvio {

struct EstimatorModes {
  bool vision = true;
  bool keyframes = true;  // false: naive per-frame augmentation
};

struct EstimatorDiagnostics {
  long imu_steps = 0;
  long frames_processed = 0;
  long keyframes_created = 0;
  long pairs_processed = 0;
  long pairs_truncated = 0;  // preempted by a newer frame
  long imu_dropped = 0;      // timestamp regressions
};

/// Real-time output of the filter.
struct Estimate {
  double t = 0.0;
  FilterState state;
  VecX marginal_std;  // sqrt of the nominal covariance diagonal (15)
};

/// Single-threaded estimator driver: owns the filter state, feeds IMU samples
/// through predict + accelerometer update, and runs the key-frame policy and
/// epipolar updates per camera frame. Copyable by value, which is what the
/// fusion pipeline's snapshot/rewind machinery relies on.
class EstimatorCore {
 public:
  EstimatorCore() = default;
  EstimatorCore(const EkfParams& ekf_params, const NoiseParams& noise,
                const KeyframePolicyConfig& policy,
                const CameraIntrinsics& intrinsics, const EstimatorModes& modes,
                const FilterState& initial_state, const MatX& initial_cov);

  /// Predict to the sample's timestamp and apply the drag-model update.
  /// Out-of-order samples are dropped (counted), not fatal.
  Estimate process_imu(const ImuSample& sample);

  /// Run correspondence assembly, gating, sequential epipolar updates and the
  /// key-frame policy for one camera frame. When `preempt` is non-null and its
  /// value moves past `preempt_baseline`, the remaining pairs are abandoned
  /// (anytime semantics); policy bookkeeping still completes.
  void process_frame(const FeatureObservation& obs,
                     const std::atomic<std::uint64_t>* preempt = nullptr,
                     std::uint64_t preempt_baseline = 0);

  Estimate estimate() const;
  double time() const { return t_; }
  bool clock_initialized() const { return clock_initialized_; }
  const FilterState& state() const { return state_; }
  const MatX& covariance() const { return P_; }
  const EstimatorDiagnostics& diagnostics() const { return diag_; }
  const Ekf& ekf() const { return ekf_; }
  const ImuSample& last_imu() const { return prev_imu_; }

 private:
  Ekf ekf_;
  KeyframePolicyConfig policy_;
  CameraIntrinsics intrinsics_;
  EstimatorModes modes_;
  FilterState state_;
  MatX P_;
  double t_ = 0.0;
  bool clock_initialized_ = false;
  ImuSample prev_imu_;
  EstimatorDiagnostics diag_;
};

}  // namespace quadvio
