#include "quadvio/sim/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace quadvio::sim {

namespace {

// Quintic smoothstep and its integral; the velocity profile within a segment
// ramps with s5, cruises, then ramps down, so segments start and end at rest.
double s5(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double ds5(double x) {
  const double y = x * (x - 1.0);
  return 30.0 * y * y;
}
double S5(double x) {  // integral of s5 from 0 to x
  return x * x * x * x * (2.5 + x * (-3.0 + x));
}

struct Progress {
  double s;   // fraction of the segment path covered, [0, 1]
  double ds;  // d s / d tau
  double dds;
};

Progress progress(double tau, double duration, double ramp_fraction,
                  bool ramp_in) {
  const double T = duration;
  const double Tr = std::clamp(ramp_fraction, 1e-3, 0.5) * T;
  const double vmax = ramp_in ? 1.0 / (T - Tr) : 1.0 / (T - 0.5 * Tr);
  tau = std::clamp(tau, 0.0, T);

  if (ramp_in && tau < Tr) {
    const double x = tau / Tr;
    return {vmax * Tr * S5(x), vmax * s5(x), vmax * ds5(x) / Tr};
  }
  if (tau <= T - Tr) {
    const double head = ramp_in ? vmax * 0.5 * Tr + vmax * (tau - Tr)
                                : vmax * tau;
    return {head, vmax, 0.0};
  }
  const double x = (T - tau) / Tr;
  return {1.0 - vmax * Tr * S5(x), vmax * s5(x), -vmax * ds5(x) / Tr};
}

double blend_fraction(double tau, double duration, double ramp_fraction) {
  const double Tb = std::clamp(ramp_fraction, 1e-3, 0.5) * duration;
  return s5(std::clamp(tau / Tb, 0.0, 1.0));
}

}  // namespace

TrajectorySegment TrajectorySegment::hover(double duration) {
  TrajectorySegment s;
  s.kind = Kind::Hover;
  s.duration = duration;
  return s;
}

TrajectorySegment TrajectorySegment::climb(double height, double duration) {
  TrajectorySegment s;
  s.kind = Kind::Translate;
  s.duration = duration;
  s.translation = Vec3(0.0, 0.0, -height);
  return s;
}

TrajectorySegment TrajectorySegment::translate(const Vec3& delta_world,
                                               double duration, YawMode yaw) {
  TrajectorySegment s;
  s.kind = Kind::Translate;
  s.duration = duration;
  s.translation = delta_world;
  s.yaw_mode = yaw;
  return s;
}

TrajectorySegment TrajectorySegment::circle(double radius, double arc,
                                            double duration, YawMode yaw,
                                            double start_angle) {
  TrajectorySegment s;
  s.kind = Kind::Circle;
  s.duration = duration;
  s.radius = radius;
  s.arc = arc;
  s.start_angle = start_angle;
  s.yaw_mode = yaw;
  return s;
}

Trajectory::Trajectory(std::vector<TrajectorySegment> segments,
                       const Vec3& start_position, double start_yaw,
                       double gravity, double drag_k1)
    : gravity_(gravity), drag_k1_(drag_k1) {
  if (segments.empty()) {
    throw ConfigError("trajectory needs at least one segment");
  }
  Vec3 p = start_position;
  double yaw = start_yaw;
  double t = 0.0;
  for (auto& seg : segments) {
    if (seg.duration <= 0.0) {
      throw ConfigError("trajectory segment with non-positive duration");
    }
    PreparedSegment ps;
    ps.seg = seg;
    ps.t_start = t;
    ps.p_start = p;
    ps.yaw_start = yaw;

    switch (seg.kind) {
      case TrajectorySegment::Kind::Hover:
        break;
      case TrajectorySegment::Kind::Translate: {
        p += seg.translation;
        if (seg.yaw_mode == TrajectorySegment::YawMode::Tangent &&
            seg.translation.head<2>().norm() > 1e-9) {
          yaw = std::atan2(seg.translation.y(), seg.translation.x());
        }
        break;
      }
      case TrajectorySegment::Kind::Circle: {
        if (seg.radius <= 0.0) {
          throw ConfigError("circle segment needs a positive radius");
        }
        const double a0 = seg.start_angle;
        ps.circle_center =
            p - seg.radius * Vec3(std::cos(a0), std::sin(a0), 0.0);
        const double a1 = a0 + seg.arc;
        p = ps.circle_center +
            seg.radius * Vec3(std::cos(a1), std::sin(a1), 0.0);
        if (seg.yaw_mode == TrajectorySegment::YawMode::Tangent) {
          yaw = wrap_angle(a1 + (seg.arc >= 0.0 ? M_PI_2 : -M_PI_2));
        }
        break;
      }
    }
    t += seg.duration;
    segments_.push_back(std::move(ps));
  }
  total_duration_ = t;
}

Trajectory::Kinematics Trajectory::evaluate(double t) const {
  t = std::clamp(t, 0.0, total_duration_);
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double value, const PreparedSegment& s) { return value < s.t_start; });
  const PreparedSegment& ps = it == segments_.begin() ? segments_.front()
                                                      : *std::prev(it);
  const TrajectorySegment& seg = ps.seg;
  const double tau = std::clamp(t - ps.t_start, 0.0, seg.duration);

  Kinematics k{ps.p_start, Vec3::Zero(), Vec3::Zero(), ps.yaw_start};
  double yaw_target = ps.yaw_start;

  switch (seg.kind) {
    case TrajectorySegment::Kind::Hover:
      return k;
    case TrajectorySegment::Kind::Translate: {
      const Progress pr =
          progress(tau, seg.duration, seg.ramp_fraction, seg.ramp_in);
      k.p = ps.p_start + pr.s * seg.translation;
      k.v = pr.ds * seg.translation;
      k.a = pr.dds * seg.translation;
      if (seg.yaw_mode == TrajectorySegment::YawMode::Tangent &&
          seg.translation.head<2>().norm() > 1e-9) {
        yaw_target = std::atan2(seg.translation.y(), seg.translation.x());
      }
      break;
    }
    case TrajectorySegment::Kind::Circle: {
      const Progress pr =
          progress(tau, seg.duration, seg.ramp_fraction, seg.ramp_in);
      const double alpha = seg.start_angle + seg.arc * pr.s;
      const double dalpha = seg.arc * pr.ds;
      const double ddalpha = seg.arc * pr.dds;
      const Vec3 radial(std::cos(alpha), std::sin(alpha), 0.0);
      const Vec3 tangent(-std::sin(alpha), std::cos(alpha), 0.0);
      k.p = ps.circle_center + seg.radius * radial;
      k.v = seg.radius * dalpha * tangent;
      k.a = seg.radius * (ddalpha * tangent - dalpha * dalpha * radial);
      if (seg.yaw_mode == TrajectorySegment::YawMode::Tangent) {
        yaw_target =
            wrap_angle(alpha + (seg.arc >= 0.0 ? M_PI_2 : -M_PI_2));
      }
      break;
    }
  }

  const double b = blend_fraction(tau, seg.duration, seg.ramp_fraction);
  k.yaw = ps.yaw_start + b * wrap_angle(yaw_target - ps.yaw_start);
  return k;
}

EulerAngles Trajectory::attitude_at(const Kinematics& k) const {
  // Body z must anti-align with c = (a - g e3) + k1 * v: then the body-frame
  // lateral components of the required specific force equal -k1 * v_xy^B and
  // the drag model holds exactly along the trajectory.
  const Vec3 c = k.a - gravity_ * Vec3::UnitZ() + drag_k1_ * k.v;
  const Vec3 z_b = -c.normalized();
  const Vec3 x_heading(std::cos(k.yaw), std::sin(k.yaw), 0.0);
  Vec3 y_b = z_b.cross(x_heading);
  const double n = y_b.norm();
  if (n < 1e-9) {
    throw ConfigError("trajectory attitude singular (thrust along heading)");
  }
  y_b /= n;
  const Vec3 x_b = y_b.cross(z_b);
  Mat3 R;
  R.col(0) = x_b;
  R.col(1) = y_b;
  R.col(2) = z_b;
  return euler_from_rotation(R);
}

TruthSample Trajectory::sample(double t) const {
  const Kinematics k = evaluate(t);
  const EulerAngles att = attitude_at(k);
  const Mat3 R_wb = euler_to_rotation(att, 1e-6);

  TruthSample s;
  s.t = t;
  s.position = k.p;
  s.attitude = att;
  s.velocity_body = R_wb.transpose() * k.v;

  // Euler-rate by central difference of the analytic attitude.
  const double h = 1e-5;
  const EulerAngles am = attitude_at(evaluate(t - h));
  const EulerAngles ap = attitude_at(evaluate(t + h));
  Vec3 euler_rate;
  euler_rate << wrap_angle(ap.roll - am.roll), wrap_angle(ap.pitch - am.pitch),
      wrap_angle(ap.yaw - am.yaw);
  euler_rate /= 2.0 * h;
  s.body_rates = xi_inverse(att) * euler_rate;

  const Vec3 c = k.a - gravity_ * Vec3::UnitZ() + drag_k1_ * k.v;
  s.thrust_specific = drag_k1_ * s.velocity_body.z() + c.norm();
  return s;
}

void Trajectory::validate(double gimbal_guard) const {
  const double step = 0.02;
  for (double t = 0.0; t <= total_duration_; t += step) {
    const EulerAngles att = attitude_at(evaluate(t));
    if (!att.within_gimbal_guard(gimbal_guard)) {
      throw ConfigError("trajectory infeasible: pitch " +
                        std::to_string(att.pitch) + " at t=" +
                        std::to_string(t) + " breaches the gimbal guard");
    }
  }
}

std::vector<TrajectorySegment> standard_mission() {
  // Mostly sideways legs with the camera looking along +x: lateral image
  // motion keeps the epipolar geometry well conditioned. The opening climb
  // starts already in motion and stays in motion through t = 10 s, so the
  // whole initial phase is purely vertical translation.
  using Seg = TrajectorySegment;
  Seg takeoff = Seg::climb(3.2, 11.0);
  takeoff.ramp_in = false;
  takeoff.ramp_fraction = 0.12;
  return {
      takeoff,
      Seg::translate(Vec3(0.0, 15.0, 0.0), 21.0, Seg::YawMode::Hold),
      Seg::translate(Vec3(6.0, -8.0, -1.0), 18.0, Seg::YawMode::Hold),
      Seg::translate(Vec3(-3.0, -10.0, 1.0), 16.0, Seg::YawMode::Hold),
      Seg::translate(Vec3(-3.0, 3.0, 0.0), 14.0, Seg::YawMode::Hold),
      Seg::hover(20.0),
  };
}

std::vector<TrajectorySegment> hover_mission() {
  using Seg = TrajectorySegment;
  return {
      Seg::climb(2.0, 5.0),
      Seg::translate(Vec3(0.0, 4.0, 0.0), 8.0, Seg::YawMode::Hold),
      Seg::hover(47.0),
  };
}

}  // namespace quadvio::sim
