#include "quadvio/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace quadvio::sim {

void SimConfig::validate() const {
  if (imu_rate <= 0.0 || camera_rate <= 0.0) {
    throw ConfigError("imu_rate and camera_rate must be positive");
  }
  const double ratio = imu_rate / camera_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError("imu_rate must be an integer multiple of camera_rate");
  }
  if (accel_noise_var < 0.0 || gyro_noise_var < 0.0 || pixel_sigma < 0.0 ||
      accel_bias_sigma < 0.0 || gyro_bias_sigma < 0.0) {
    throw ConfigError("noise parameters must be non-negative");
  }
  if (pixel_bias_fraction < 0.0 || pixel_bias_fraction >= 1.0) {
    throw ConfigError("pixel_bias_fraction must lie in [0, 1)");
  }
  if (feature_count <= 0 || min_tracked_features <= 0 ||
      tracked_feature_target < min_tracked_features) {
    throw ConfigError("feature counts misconfigured");
  }
  if (!intrinsics.valid()) {
    throw ConfigError("camera intrinsics must have positive focal lengths");
  }
  if (drag_k1 <= 0.0 || mass <= 0.0 || gravity <= 0.0) {
    throw ConfigError("mass, gravity and drag coefficient must be positive");
  }
}

int SimConfig::imu_per_frame() const {
  return static_cast<int>(std::round(imu_rate / camera_rate));
}

double SimConfig::pixel_bias_sigma() const {
  return pixel_bias_fraction * pixel_sigma;
}

double SimConfig::pixel_jitter_sigma() const {
  return std::sqrt(std::max(0.0, 1.0 - pixel_bias_fraction * pixel_bias_fraction)) *
         pixel_sigma;
}

FeatureWorld make_world(const SimConfig& cfg, std::mt19937_64& rng) {
  FeatureWorld world;
  world.points.reserve(cfg.feature_count);
  std::uniform_real_distribution<double> ux(-0.5 * cfg.world_extent.x(),
                                            0.5 * cfg.world_extent.x());
  std::uniform_real_distribution<double> uy(-0.5 * cfg.world_extent.y(),
                                            0.5 * cfg.world_extent.y());
  std::uniform_real_distribution<double> uz(-0.5 * cfg.world_extent.z(),
                                            0.5 * cfg.world_extent.z());
  for (int i = 0; i < cfg.feature_count; ++i) {
    world.points.emplace_back(ux(rng), uy(rng), uz(rng));
  }
  return world;
}

std::optional<Vec2> project_point(const Vec3& point_world,
                                  const Vec3& body_position,
                                  const EulerAngles& attitude,
                                  const CameraIntrinsics& K, int image_width,
                                  int image_height, double min_depth) {
  const Mat3 R_cw =
      forward_camera_rotation() * euler_to_rotation(attitude).transpose();
  const Vec3 pc = R_cw * (point_world - body_position);
  if (pc.z() < min_depth) {
    return std::nullopt;
  }
  const double u = K.fx * pc.x() / pc.z() + K.cx;
  const double v = K.fy * pc.y() / pc.z() + K.cy;
  if (u < 0.0 || u >= image_width || v < 0.0 || v >= image_height) {
    return std::nullopt;
  }
  return Vec2(u, v);
}

ImuSample synthesize_imu(const TruthSample& truth, const SimConfig& cfg,
                         const Vec3& accel_bias, const Vec3& gyro_bias,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sa = std::sqrt(cfg.accel_noise_var);
  const double sg = std::sqrt(cfg.gyro_noise_var);

  ImuSample s;
  s.t = truth.t;
  s.accel = Vec3(-cfg.drag_k1 * truth.velocity_body.x(),
                 -cfg.drag_k1 * truth.velocity_body.y(),
                 -truth.thrust_specific) +
            accel_bias;
  s.gyro = truth.body_rates + gyro_bias;
  for (int i = 0; i < 3; ++i) {
    s.accel(i) += sa * gauss(rng);
  }
  for (int i = 0; i < 3; ++i) {
    s.gyro(i) += sg * gauss(rng);
  }
  return s;
}

FeatureTracker::FeatureTracker(const SimConfig& cfg, const FeatureWorld& world)
    : cfg_(cfg), world_(world), in_use_(world.points.size(), 0) {}

FeatureObservation FeatureTracker::observe(const TruthSample& truth,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto in_image = [&](double u, double v) {
    return u >= 0.0 && u < cfg_.image_width && v >= 0.0 &&
           v < cfg_.image_height;
  };

  FeatureObservation obs;
  obs.t = truth.t;
  const double jitter = cfg_.pixel_jitter_sigma();

  // Keep tracks whose noisy measurement still lands on the sensor; anything
  // else is lost for good, so an emitted id never reappears after a gap.
  std::vector<Track> survivors;
  survivors.reserve(active_.size());
  for (const Track& tr : active_) {
    const auto px = project_point(world_.points[tr.world_index], truth.position,
                                  truth.attitude, cfg_.intrinsics,
                                  cfg_.image_width, cfg_.image_height,
                                  cfg_.min_depth);
    if (!px) {
      in_use_[tr.world_index] = 0;
      continue;
    }
    const double u = px->x() + tr.bias.x() + jitter * gauss(rng);
    const double v = px->y() + tr.bias.y() + jitter * gauss(rng);
    if (!in_image(u, v)) {
      in_use_[tr.world_index] = 0;
      continue;
    }
    survivors.push_back(tr);
    obs.points.push_back({tr.id, u, v});
  }
  active_ = std::move(survivors);

  if (static_cast<int>(active_.size()) < cfg_.min_tracked_features) {
    // Activate the nearest visible, unused world points until the target
    // count is reached (the re-detection analogue).
    std::vector<std::pair<double, int>> candidates;
    for (int i = 0; i < static_cast<int>(world_.points.size()); ++i) {
      if (in_use_[i]) {
        continue;
      }
      const auto px = project_point(world_.points[i], truth.position,
                                    truth.attitude, cfg_.intrinsics,
                                    cfg_.image_width, cfg_.image_height,
                                    cfg_.min_depth);
      if (px) {
        const double depth = (world_.points[i] - truth.position).norm();
        candidates.emplace_back(depth, i);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    const double bias_sigma = cfg_.pixel_bias_sigma();
    for (const auto& [depth, idx] : candidates) {
      if (static_cast<int>(active_.size()) >= cfg_.tracked_feature_target) {
        break;
      }
      const auto px = project_point(world_.points[idx], truth.position,
                                    truth.attitude, cfg_.intrinsics,
                                    cfg_.image_width, cfg_.image_height,
                                    cfg_.min_depth);
      const Vec2 bias(bias_sigma * gauss(rng), bias_sigma * gauss(rng));
      const double u = px->x() + bias.x() + jitter * gauss(rng);
      const double v = px->y() + bias.y() + jitter * gauss(rng);
      if (!in_image(u, v)) {
        continue;
      }
      Track tr{next_id_++, idx, bias};
      in_use_[idx] = 1;
      active_.push_back(tr);
      obs.points.push_back({tr.id, u, v});
    }
  }

  std::sort(obs.points.begin(), obs.points.end(),
            [](const FeaturePoint& a, const FeaturePoint& b) {
              return a.id < b.id;
            });
  return obs;
}

SimLog run_simulation(const SimConfig& cfg, const Trajectory& trajectory,
                      double duration) {
  cfg.validate();
  if (duration <= 0.0 || duration > trajectory.duration() + 1e-9) {
    throw ConfigError("simulation duration must lie within the trajectory");
  }
  trajectory.validate();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SimLog log;
  log.config = cfg;
  for (int i = 0; i < 3; ++i) {
    log.true_accel_bias(i) = cfg.accel_bias_sigma * gauss(rng);
  }
  for (int i = 0; i < 3; ++i) {
    log.true_gyro_bias(i) = cfg.gyro_bias_sigma * gauss(rng);
  }

  const FeatureWorld world = make_world(cfg, rng);
  FeatureTracker tracker(cfg, world);

  const double dt = 1.0 / cfg.imu_rate;
  const long n_steps = std::lround(duration * cfg.imu_rate);
  const int per_frame = cfg.imu_per_frame();

  log.imu.reserve(n_steps);
  log.truth.reserve(n_steps);
  for (long k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    const TruthSample truth = trajectory.sample(t);
    log.truth.push_back(truth);
    log.imu.push_back(
        synthesize_imu(truth, cfg, log.true_accel_bias, log.true_gyro_bias, rng));
    if (k % per_frame == 0) {
      log.frames.push_back(tracker.observe(truth, rng));
    }
  }
  return log;
}

}  // namespace quadvio::sim
