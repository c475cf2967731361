#pragma once

#include <string>
#include <vector>

#include "quadvio/io/run_config.hpp"
#include "quadvio/pipeline/estimator_core.hpp"
#include "quadvio/sim/simulator.hpp"

namespace quadvio::io {

// Plain-text log formats, 17 significant digits so write-then-read is exact.
//   imu.csv          t_s,ax,ay,az,gx,gy,gz
//   groundtruth.csv  t_s,px,py,pz,roll,pitch,yaw,vx,vy,vz
//   features.jsonl   one frame per line: {"t": ..., "obs": [[id,u,v], ...]}
//   estimates.csv    t_s, 15 state columns, 15 marginal-std columns

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& imu);
std::vector<ImuSample> read_imu_csv(const std::string& path);

void write_features_jsonl(const std::string& path,
                          const std::vector<FeatureObservation>& frames);
std::vector<FeatureObservation> read_features_jsonl(const std::string& path);

void write_groundtruth_csv(const std::string& path,
                           const std::vector<sim::TruthSample>& truth);
/// body_rates and thrust are not serialized; they read back as zero.
std::vector<sim::TruthSample> read_groundtruth_csv(const std::string& path);

/// One row of an estimate trace as stored on disk.
struct EstimateRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();
  Vec3 velocity_body = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  VecX marginal_std;  // 15
};

void write_estimates_csv(const std::string& path,
                         const std::vector<Estimate>& trace);
std::vector<EstimateRow> read_estimates_csv(const std::string& path);

/// Write imu.csv, features.jsonl, groundtruth.csv and resolved_config.cfg.
void write_sim_log(const std::string& dir, const sim::SimLog& log,
                   const RunConfig& config);

struct LoadedLog {
  RunConfig config;
  sim::SimLog log;  // truth filled from groundtruth.csv (poses/velocity only)
};

/// Read a directory written by write_sim_log.
LoadedLog read_sim_log(const std::string& dir);

}  // namespace quadvio::io
