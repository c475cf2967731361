#pragma once

#include <array>

#include "quadvio/types.hpp"

// Frame and sign conventions used throughout:
//  - World frame {W}: z axis pointing down (NED-like), gravity is +g*e3 in {W}.
//  - Body frame {B}: x forward, y right, z down; x-y plane parallel to the
//    propeller plane. At level hover the body z accelerometer reads -g.
//  - Camera frame {C}: origin coincident with {B}, optical axis (camera z)
//    along body x; camera x right (body y), camera y down (body z).
//  - EulerAngles are ZYX: R_WB = Rz(yaw) * Ry(pitch) * Rx(roll) maps body
//    coordinates to world coordinates.

namespace quadvio {

inline constexpr double kGimbalGuard = 0.1;  // rad below pi/2 where pitch is rejected

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// ZYX Euler attitude (roll about x, pitch about y, yaw about z).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  EulerAngles() = default;
  EulerAngles(double r, double p, double y);

  static EulerAngles from_vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  Vec3 vec() const { return {roll, pitch, yaw}; }

  /// Re-wrap all three angles to (-pi, pi].
  EulerAngles normalized() const;

  bool within_gimbal_guard(double guard = kGimbalGuard) const;
};

/// Zero-skew pinhole intrinsics.
struct CameraIntrinsics {
  double fx = 450.0;
  double fy = 450.0;
  double cx = 320.0;
  double cy = 240.0;

  Mat3 matrix() const;
  Mat3 inverse() const;
  bool valid() const { return fx > 0.0 && fy > 0.0; }
};

/// Image point in homogeneous coordinates, normalized so w = 1.
struct PixelHomogeneous {
  double u = 0.0;
  double v = 0.0;

  PixelHomogeneous() = default;
  PixelHomogeneous(double u_px, double v_px) : u(u_px), v(v_px) {}

  /// From a raw homogeneous vector; divides through by w (w must be nonzero).
  static PixelHomogeneous from_homogeneous(const Vec3& h);

  Vec3 homogeneous() const { return {u, v, 1.0}; }
};

/// Skew-symmetric matrix: skew(v) * q == v x q.
Mat3 skew(const Vec3& v);

/// Body-to-world rotation R_WB = Rz(yaw)*Ry(pitch)*Rx(roll).
/// Throws std::domain_error when |pitch| >= pi/2 - guard.
Mat3 euler_to_rotation(const EulerAngles& e, double guard = kGimbalGuard);

/// Recover ZYX Euler angles from a body-to-world rotation.
EulerAngles euler_from_rotation(const Mat3& R);

/// Partial derivatives of euler_to_rotation with respect to (roll, pitch, yaw).
std::array<Mat3, 3> euler_rotation_partials(const EulerAngles& e);

/// Euler-rate kinematics: euler_rates = xi_matrix(e) * body_rates.
/// Throws std::domain_error at the gimbal guard.
Mat3 xi_matrix(const EulerAngles& e, double guard = kGimbalGuard);

/// Inverse map: body_rates = xi_inverse(e) * euler_rates.
Mat3 xi_inverse(const EulerAngles& e);

/// Partial derivatives of xi_matrix(e) * w with respect to (roll, pitch, yaw),
/// returned as a 3x3 matrix whose column j is d(Xi*w)/d(angle_j).
Mat3 xi_times_vector_jacobian(const EulerAngles& e, const Vec3& w);

/// Fixed body-to-camera rotation for a forward-looking camera (optical axis
/// along body x, camera x along body y, camera y along body z).
Mat3 forward_camera_rotation();

/// Essential matrix for two camera poses:
///   E = R_cw_current * skew(p_d) * R_cw_prev^T
/// where R_cw_* are world-to-camera rotations and p_d is the previous camera
/// position minus the current one, in world coordinates. Correspondences
/// satisfy p_cur^T K^-T E K^-1 p_prev = 0. p_d = 0 yields E = 0.
Mat3 essential_from_relative_pose(const Mat3& R_cw_current,
                                  const Mat3& R_cw_prev,
                                  const Vec3& p_d);

}  // namespace quadvio
