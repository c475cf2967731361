#include "quadvio/geometry.hpp"

#include <cmath>

namespace quadvio {

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) {
    w = M_PI;
  }
  return w;
}

EulerAngles::EulerAngles(double r, double p, double y)
    : roll(wrap_angle(r)), pitch(wrap_angle(p)), yaw(wrap_angle(y)) {}

EulerAngles EulerAngles::normalized() const {
  return {wrap_angle(roll), wrap_angle(pitch), wrap_angle(yaw)};
}

bool EulerAngles::within_gimbal_guard(double guard) const {
  return std::abs(pitch) < M_PI / 2.0 - guard;
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Mat3 CameraIntrinsics::inverse() const {
  Mat3 Ki;
  Ki << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return Ki;
}

PixelHomogeneous PixelHomogeneous::from_homogeneous(const Vec3& h) {
  return {h.x() / h.z(), h.y() / h.z()};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

namespace {

void check_gimbal(const EulerAngles& e, double guard) {
  if (!e.within_gimbal_guard(guard)) {
    throw std::domain_error("pitch within gimbal guard violated: pitch=" +
                            std::to_string(e.pitch));
  }
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}

Mat3 drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}

Mat3 drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}

}  // namespace

Mat3 euler_to_rotation(const EulerAngles& e, double guard) {
  check_gimbal(e, guard);
  return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

EulerAngles euler_from_rotation(const Mat3& R) {
  EulerAngles e;
  e.pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  e.roll = std::atan2(R(2, 1), R(2, 2));
  e.yaw = std::atan2(R(1, 0), R(0, 0));
  return e;
}

std::array<Mat3, 3> euler_rotation_partials(const EulerAngles& e) {
  const Mat3 Rz = rot_z(e.yaw), Ry = rot_y(e.pitch), Rx = rot_x(e.roll);
  return {Rz * Ry * drot_x(e.roll), Rz * drot_y(e.pitch) * Rx,
          drot_z(e.yaw) * Ry * Rx};
}

Mat3 xi_matrix(const EulerAngles& e, double guard) {
  check_gimbal(e, guard);
  const double sp = std::sin(e.roll), cp = std::cos(e.roll);
  const double ct = std::cos(e.pitch), tt = std::tan(e.pitch);
  Mat3 m;
  m << 1.0, sp * tt, cp * tt, 0.0, cp, -sp, 0.0, sp / ct, cp / ct;
  return m;
}

Mat3 xi_inverse(const EulerAngles& e) {
  const double sp = std::sin(e.roll), cp = std::cos(e.roll);
  const double st = std::sin(e.pitch), ct = std::cos(e.pitch);
  Mat3 m;
  m << 1.0, 0.0, -st, 0.0, cp, sp * ct, 0.0, -sp, cp * ct;
  return m;
}

Mat3 xi_times_vector_jacobian(const EulerAngles& e, const Vec3& w) {
  const double sp = std::sin(e.roll), cp = std::cos(e.roll);
  const double ct = std::cos(e.pitch), st = std::sin(e.pitch);
  const double tt = st / ct;

  Mat3 dphi;
  dphi << 0.0, cp * tt, -sp * tt, 0.0, -sp, -cp, 0.0, cp / ct, -sp / ct;
  Mat3 dtheta;
  const double ict2 = 1.0 / (ct * ct);
  dtheta << 0.0, sp * ict2, cp * ict2, 0.0, 0.0, 0.0, 0.0, sp * st * ict2,
      cp * st * ict2;

  Mat3 jac = Mat3::Zero();
  jac.col(0) = dphi * w;
  jac.col(1) = dtheta * w;
  // Xi does not depend on yaw.
  return jac;
}

Mat3 forward_camera_rotation() {
  Mat3 R_cb;
  R_cb << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return R_cb;
}

Mat3 essential_from_relative_pose(const Mat3& R_cw_current,
                                  const Mat3& R_cw_prev, const Vec3& p_d) {
  return R_cw_current * skew(p_d) * R_cw_prev.transpose();
}

}  // namespace quadvio
