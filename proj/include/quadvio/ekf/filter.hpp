#pragma once

#include <limits>

#include "quadvio/ekf/state.hpp"
#include "quadvio/measurements.hpp"

namespace quadvio {

/// Model constants, gates and numerical floors for the filter.
struct EkfParams {
  double gravity = 9.81;            // m/s^2
  double drag_k1 = 0.35;            // lateral drag coefficient, 1/s
  double gimbal_guard = kGimbalGuard;
  double max_dt = 0.01;             // s; largest accepted prediction step
  double accel_gate_sigma = 5.0;    // per-axis innovation gate
  double vision_gate_threshold = 2.0;
  bool vision_gate_raw = false;     // true: gate on |r| > threshold * sigma_i
  double rvo_floor = 1e-18;         // variance floor for the epipolar pseudo-measurement
  double pixel_sigma_floor = 0.25;  // px; never claim sub-quarter-pixel fidelity
  double vision_noise_inflation = 7.0;  // robustness factor on the epipolar noise
  // Extra epipolar noise proportional to (baseline uncertainty / baseline)^2:
  // the relative scale of the linearization error, which is what corrupts
  // updates when the key-frame baseline is small.
  double low_baseline_inflation = 50.0;
  bool use_fej = true;              // first-estimates Jacobian on the anchor block
  Mat3 body_to_camera = forward_camera_rotation();
};

/// Extended Kalman filter fusing IMU prediction, the drag-model accelerometer
/// update and pairwise epipolar constraints against a cloned key-frame pose.
class Ekf {
 public:
  Ekf() = default;
  Ekf(const EkfParams& params, const NoiseParams& noise)
      : params_(params), noise_(noise) {}

  struct EpipolarEval {
    double residual = 0.0;
    RowVecX jacobian;    // 1 x 21; zero on velocity and bias blocks
    // Sensitivities of the Jacobian row to the measured pixels. Pixel noise
    // perturbs the linearization itself, and because the same noise sits in
    // the residual the product rectifies into a systematic drift; both the
    // extra variance and the closed-form bias correction are built from
    // these rows.
    RowVecX jacobian_du;   // current image u
    RowVecX jacobian_dv;   // current image v
    RowVecX jacobian_dku;  // key-frame image u
    RowVecX jacobian_dkv;  // key-frame image v
    bool degenerate = false;  // ||p_d|| below 1e-6 m
  };

  struct Counters {
    long accel_rejected = 0;
    long vision_accepted = 0;
    long vision_rejected = 0;
    long degenerate_pairs = 0;
  };

  /// Propagate mean and covariance over dt holding the IMU sample constant.
  /// Optionally returns the state-transition Jacobian actually applied to P.
  void predict(FilterState& state, MatX& P, const ImuSample& imu, double dt,
               MatX* transition_out = nullptr) const;

  /// Drag-model accelerometer measurement: predicted x,y specific force and
  /// its Jacobian over the (possibly augmented) state.
  std::pair<Vec2, MatX> accel_model(const FilterState& state) const;

  /// Drag-model update from the x,y accelerometer channels.
  /// Returns false when the innovation fails the gate (state untouched).
  bool update_accel(FilterState& state, MatX& P, const Vec2& accel_xy);

  /// Scalar epipolar residual and its state Jacobian. The anchor-pose columns
  /// are evaluated at the anchor's first estimate when FEJ is enabled.
  EpipolarEval epipolar_residual(const FilterState& state,
                                 const CameraIntrinsics& K,
                                 const CorrespondencePair& pair) const;

  /// Pixel-noise-induced variance of the epipolar residual, floored.
  double visual_noise_variance(const FilterState& state,
                               const CameraIntrinsics& K,
                               const CorrespondencePair& pair) const;

  /// One sequential scalar update from a correspondence pair (perfect
  /// measurement: pseudo-measurement 0 with variance from the pixel noise).
  /// frame_time, when given, lets the noise model distinguish a long-held
  /// key frame (static scene) from a freshly created one. Returns false when
  /// gated out.
  bool visual_update(FilterState& state, MatX& P,
                     const CorrespondencePair& pair, const CameraIntrinsics& K,
                     double frame_time =
                         std::numeric_limits<double>::quiet_NaN());

  /// Normalized innovation gate: reject when |residual|/sqrt(S) exceeds the
  /// threshold (raw mode compares |residual| against threshold * sigma_i).
  bool gate_outlier(double residual, double innovation_var) const;

  /// Clone the current pose as the key-frame anchor (replacing any previous
  /// anchor) and extend P with exact clone correlations.
  void augment_state(FilterState& state, MatX& P,
                     std::vector<std::pair<int, Vec2>> snapshot,
                     double image_time) const;

  /// Marginalize the anchor out (row/column deletion).
  void drop_anchor(FilterState& state, MatX& P) const;

  const EkfParams& params() const { return params_; }
  const NoiseParams& noise() const { return noise_; }
  const Counters& counters() const { return counters_; }
  const Vec2& last_accel_innovation() const { return last_accel_innovation_; }

 private:
  // Continuous-time dynamics and its state Jacobian at (state, imu).
  VecX derivative(const FilterState& state, const ImuSample& imu) const;
  MatX dynamics_jacobian(const FilterState& state, const ImuSample& imu) const;
  MatX process_noise(const FilterState& state, double dt) const;

  // Essential matrix at the current estimate.
  Mat3 estimated_essential(const FilterState& state) const;
  // g = K^-T E K^-1 * keyframe pixel: dh/d(current pixel) and the epipolar
  // line of the key-frame point in the current image.
  Vec3 epipolar_g(const FilterState& state, const CameraIntrinsics& K,
                  const CorrespondencePair& pair) const;

  EkfParams params_;
  NoiseParams noise_;
  Counters counters_;
  Vec2 last_accel_innovation_ = Vec2::Zero();
};

}  // namespace quadvio
