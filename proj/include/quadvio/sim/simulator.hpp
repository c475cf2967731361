#pragma once

#include <optional>
#include <random>
#include <vector>

#include "quadvio/measurements.hpp"
#include "quadvio/sim/trajectory.hpp"

namespace quadvio::sim {

struct SimConfig {
  double mass = 1.3;               // kg
  double drag_k1 = 0.35;           // 1/s
  double gravity = 9.81;           // m/s^2
  double accel_noise_var = 0.25;   // m^2/s^4 per axis
  double gyro_noise_var = 0.005;   // rad^2/s^2 per axis
  double accel_bias_sigma = 0.05;  // m/s^2; bias drawn once per run
  double gyro_bias_sigma = 0.01;   // rad/s
  double imu_rate = 200.0;         // Hz
  double camera_rate = 10.0;       // Hz
  Vec3 world_extent{200.0, 200.0, 50.0};  // m, centered on the start position
  int feature_count = 2000;
  int min_tracked_features = 30;   // re-detect threshold
  int tracked_feature_target = 50; // refill level after re-detection
  double pixel_sigma = 1.0;        // px, total per-observation noise
  // Optional split of the tracker error into a per-track constant (patch
  // localization bias) and fresh jitter: bias std = fraction * sigma,
  // jitter std = sqrt(1 - fraction^2) * sigma. Zero keeps the noise iid.
  double pixel_bias_fraction = 0.0;
  int image_width = 640;
  int image_height = 480;
  CameraIntrinsics intrinsics{450.0, 450.0, 320.0, 240.0};
  double min_depth = 0.1;          // m
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
  int imu_per_frame() const;
  double pixel_bias_sigma() const;
  double pixel_jitter_sigma() const;
};

/// Static 3D point world; the vector index is the persistent world-point id.
struct FeatureWorld {
  std::vector<Vec3> points;
};

FeatureWorld make_world(const SimConfig& cfg, std::mt19937_64& rng);

/// Pinhole projection of a world point into the camera at the given body
/// pose. Returns nothing when the point is behind the camera (depth below
/// min_depth) or projects outside the image.
std::optional<Vec2> project_point(const Vec3& point_world,
                                  const Vec3& body_position,
                                  const EulerAngles& attitude,
                                  const CameraIntrinsics& K, int image_width,
                                  int image_height, double min_depth);

/// IMU measurement for one truth sample: gyro with bias and noise; lateral
/// accelerometers follow the drag model, the z channel the thrust.
ImuSample synthesize_imu(const TruthSample& truth, const SimConfig& cfg,
                         const Vec3& accel_bias, const Vec3& gyro_bias,
                         std::mt19937_64& rng);

/// Synthetic stand-in for the detect-and-track front end. Tracks keep a
/// monotonically assigned id while their world point stays in view; once a
/// track is lost its id is never reused.
class FeatureTracker {
 public:
  FeatureTracker(const SimConfig& cfg, const FeatureWorld& world);

  FeatureObservation observe(const TruthSample& truth, std::mt19937_64& rng);

 private:
  struct Track {
    int id;
    int world_index;
    Vec2 bias;  // frozen localization error of this track
  };

  const SimConfig& cfg_;
  const FeatureWorld& world_;
  std::vector<Track> active_;
  std::vector<char> in_use_;
  int next_id_ = 0;
};

/// Everything one simulation run produces.
struct SimLog {
  SimConfig config;
  std::vector<ImuSample> imu;
  std::vector<FeatureObservation> frames;
  std::vector<TruthSample> truth;  // sampled at IMU timestamps
  Vec3 true_accel_bias = Vec3::Zero();
  Vec3 true_gyro_bias = Vec3::Zero();
};

/// Deterministic full run over the trajectory: one truth/IMU row per IMU tick,
/// one feature frame per camera tick, all seeded from cfg.seed.
SimLog run_simulation(const SimConfig& cfg, const Trajectory& trajectory,
                      double duration);

}  // namespace quadvio::sim
