#pragma once

#include <vector>

#include "quadvio/geometry.hpp"
#include "quadvio/types.hpp"

namespace quadvio::sim {

/// Ground-truth sample of the vehicle at one instant.
struct TruthSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();       // ^W p_B, m
  EulerAngles attitude;               // rad
  Vec3 velocity_body = Vec3::Zero();  // v_B, m/s
  Vec3 body_rates = Vec3::Zero();     // Omega_B, rad/s
  double thrust_specific = 0.0;       // f_T / m, m/s^2
};

/// One rest-to-rest motion primitive. Velocity and acceleration are zero at
/// both ends, so any sequence of segments is C2 in position.
struct TrajectorySegment {
  enum class Kind { Hover, Translate, Circle };
  enum class YawMode { Hold, Tangent };

  Kind kind = Kind::Hover;
  double duration = 1.0;          // s
  Vec3 translation = Vec3::Zero();  // Translate: world displacement
  double radius = 0.0;            // Circle: m
  double arc = 0.0;               // Circle: signed swept angle, rad
  double start_angle = 0.0;       // Circle: initial angle on the circle, rad
  YawMode yaw_mode = YawMode::Hold;
  double ramp_fraction = 0.25;    // fraction of duration spent ramping per end
  // When false the segment starts already at cruise speed; only valid for
  // the first segment of a trajectory (interior joins must be at rest).
  bool ramp_in = true;

  static TrajectorySegment hover(double duration);
  /// Gain `height` meters of altitude (world z decreases; z points down).
  static TrajectorySegment climb(double height, double duration);
  static TrajectorySegment translate(const Vec3& delta_world, double duration,
                                     YawMode yaw = YawMode::Hold);
  static TrajectorySegment circle(double radius, double arc, double duration,
                                  YawMode yaw = YawMode::Tangent,
                                  double start_angle = 0.0);
};

/// Analytic quadrotor trajectory. Attitude is derived from the commanded
/// acceleration through differential flatness of the drag model, so the
/// lateral body specific force equals -k1 * v_xy exactly along the path.
class Trajectory {
 public:
  Trajectory(std::vector<TrajectorySegment> segments, const Vec3& start_position,
             double start_yaw, double gravity, double drag_k1);

  double duration() const { return total_duration_; }

  /// Evaluate ground truth at time t (clamped into [0, duration]).
  TruthSample sample(double t) const;

  /// Coarsely sweeps the trajectory and throws ConfigError if any sample
  /// breaches the gimbal guard.
  void validate(double gimbal_guard = kGimbalGuard) const;

 private:
  struct PreparedSegment {
    TrajectorySegment seg;
    double t_start = 0.0;
    Vec3 p_start = Vec3::Zero();
    double yaw_start = 0.0;
    Vec3 circle_center = Vec3::Zero();
  };

  struct Kinematics {
    Vec3 p, v, a;
    double yaw;
  };

  Kinematics evaluate(double t) const;
  EulerAngles attitude_at(const Kinematics& k) const;

  std::vector<PreparedSegment> segments_;
  double total_duration_ = 0.0;
  double gravity_ = 9.81;
  double drag_k1_ = 0.35;
};

/// 100 s mission mirroring the simulated flight pattern: 10 s pure vertical
/// climb, sideways translation, a circular sweep, then hover from t = 80 s.
std::vector<TrajectorySegment> standard_mission();

/// Short move followed by a long stationary phase (hover-divergence studies).
std::vector<TrajectorySegment> hover_mission();

}  // namespace quadvio::sim
