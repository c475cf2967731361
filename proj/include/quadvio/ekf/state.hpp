#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "quadvio/geometry.hpp"
#include "quadvio/types.hpp"

namespace quadvio {

// State layout. The nominal vector is 15 states; an active key-frame anchor
// appends its 6-DoF pose.
inline constexpr int kIdxPos = 0;
inline constexpr int kIdxAtt = 3;
inline constexpr int kIdxVel = 6;
inline constexpr int kIdxBa = 9;
inline constexpr int kIdxBg = 12;
inline constexpr int kNominalDim = 15;
inline constexpr int kIdxAnchorPos = 15;
inline constexpr int kIdxAnchorAtt = 18;
inline constexpr int kAugmentedDim = 21;

struct KeyframePose {
  Vec3 position = Vec3::Zero();
  EulerAngles attitude;
};

/// Camera pose cloned into the state at key-frame creation. The first-estimate
/// copy is frozen at augmentation and used for FEJ Jacobians; the feature
/// snapshot is what later frames are matched against. Each snapshot pixel is
/// one noisy measurement reused by every frame until the next key-frame, so
/// the per-feature use count drives the reuse-aware noise model.
struct KeyframeAnchor {
  KeyframePose pose;
  KeyframePose first_estimate;
  double image_time = 0.0;
  std::vector<std::pair<int, Vec2>> snapshot;  // sorted by feature id
  std::vector<int> snapshot_use_counts;        // parallel to snapshot

  /// Index of a feature id in the snapshot, -1 if absent.
  int snapshot_index(int id) const;
};

struct FilterState {
  Vec3 position = Vec3::Zero();        // ^W p_B, m
  EulerAngles attitude;                // ZYX Euler, rad
  Vec3 velocity_body = Vec3::Zero();   // v_B, m/s
  Vec3 accel_bias = Vec3::Zero();      // m/s^2
  Vec3 gyro_bias = Vec3::Zero();       // rad/s
  std::optional<KeyframeAnchor> anchor;

  int dim() const { return anchor ? kAugmentedDim : kNominalDim; }

  /// Nominal (or augmented) state as a flat vector, anchor pose last.
  VecX vector() const;

  /// Additive correction; attitude angles are re-wrapped to (-pi, pi].
  /// The anchor's first-estimate copy is never touched.
  void apply_delta(const VecX& dx);
};

/// Continuous-time noise intensities for the process and measurement models.
struct NoiseParams {
  double model_accel_var = 0.5;     // eta_v, (m/s^2)^2 per sample
  double gyro_var = 0.005;          // eta_g, rad^2/s^2
  double accel_var = 0.25;          // eta_a, m^2/s^4
  double pixel_sigma = 1.0;         // sigma_i, px
  double accel_bias_rw = 6e-6;      // random-walk intensity, (m/s^2)^2/s
  double gyro_bias_rw = 1.5e-7;     // (rad/s)^2/s
};

/// Initial marginal variances for the nominal state blocks.
struct InitialCovariance {
  double pos_var = 1e-4;        // m^2
  double att_var = 1e-4;        // rad^2, roll/pitch
  double yaw_var = 1e-6;        // rad^2; yaw defines the world origin
  double vel_var = 1e-2;        // (m/s)^2
  double accel_bias_var = 0.04; // (m/s^2)^2
  double gyro_bias_var = 1e-4;  // (rad/s)^2

  MatX matrix() const;
};

/// P must stay symmetric and positive semi-definite: Cholesky of P + jitter*I
/// has to succeed with jitter no larger than 1e-12.
bool covariance_valid(const MatX& P, double sym_tol = 1e-10,
                      double jitter = 1e-12);

}  // namespace quadvio
