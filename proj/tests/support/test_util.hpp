#pragma once

#include <functional>
#include <optional>
#include <random>

#include "quadvio/geometry.hpp"
#include "quadvio/types.hpp"

namespace quadvio::testutil {

inline Vec3 random_vec3(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Random attitude comfortably inside the gimbal guard and away from the
/// +-pi wrap so finite differences stay smooth.
inline EulerAngles random_attitude(std::mt19937& rng) {
  std::uniform_real_distribution<double> ang(-1.2, 1.2);
  std::uniform_real_distribution<double> pitch(-1.0, 1.0);
  return {ang(rng), pitch(rng), ang(rng)};
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double h = 1e-6) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

/// Classic RK4 over a fixed horizon.
inline VecX rk4(const std::function<VecX(const VecX&)>& f, VecX x, double T,
                double h) {
  double t = 0.0;
  while (t < T - 1e-12) {
    const double step = std::min(h, T - t);
    const VecX k1 = f(x);
    const VecX k2 = f(x + 0.5 * step * k1);
    const VecX k3 = f(x + 0.5 * step * k2);
    const VecX k4 = f(x + step * k3);
    x += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += step;
  }
  return x;
}

/// Pinhole projection oracle, independent of the simulator implementation.
inline std::optional<Vec3> project_homogeneous(const Vec3& point_world,
                                               const Mat3& R_cw,
                                               const Vec3& cam_pos_world,
                                               const CameraIntrinsics& K) {
  const Vec3 pc = R_cw * (point_world - cam_pos_world);
  if (pc.z() <= 1e-6) {
    return std::nullopt;
  }
  const Vec3 px = K.matrix() * pc;
  return Vec3(px.x() / px.z(), px.y() / px.z(), 1.0);
}

}  // namespace quadvio::testutil
