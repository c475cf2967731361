#include "quadvio/io/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace quadvio::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for key '" + key + "': " + value);
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for key '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  throw ConfigError("bad boolean value for key '" + key + "': " + value);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

RunConfig RunConfig::from_string(const std::string& text,
                                 const std::string& origin) {
  RunConfig cfg;
  Vec3 tba = Vec3::Zero(), tbg = Vec3::Zero();
  bool has_tba = false, has_tbg = false;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"mass", [&](auto& k, auto& v) { cfg.sim.mass = parse_double(k, v); }},
      {"drag_k1", [&](auto& k, auto& v) { cfg.sim.drag_k1 = parse_double(k, v); }},
      {"gravity", [&](auto& k, auto& v) { cfg.sim.gravity = parse_double(k, v); }},
      {"accel_noise_var", [&](auto& k, auto& v) { cfg.sim.accel_noise_var = parse_double(k, v); }},
      {"gyro_noise_var", [&](auto& k, auto& v) { cfg.sim.gyro_noise_var = parse_double(k, v); }},
      {"accel_bias_sigma", [&](auto& k, auto& v) { cfg.sim.accel_bias_sigma = parse_double(k, v); }},
      {"gyro_bias_sigma", [&](auto& k, auto& v) { cfg.sim.gyro_bias_sigma = parse_double(k, v); }},
      {"imu_rate", [&](auto& k, auto& v) { cfg.sim.imu_rate = parse_double(k, v); }},
      {"camera_rate", [&](auto& k, auto& v) { cfg.sim.camera_rate = parse_double(k, v); }},
      {"world_x", [&](auto& k, auto& v) { cfg.sim.world_extent.x() = parse_double(k, v); }},
      {"world_y", [&](auto& k, auto& v) { cfg.sim.world_extent.y() = parse_double(k, v); }},
      {"world_z", [&](auto& k, auto& v) { cfg.sim.world_extent.z() = parse_double(k, v); }},
      {"feature_count", [&](auto& k, auto& v) { cfg.sim.feature_count = static_cast<int>(parse_int(k, v)); }},
      {"min_tracked_features", [&](auto& k, auto& v) { cfg.sim.min_tracked_features = static_cast<int>(parse_int(k, v)); }},
      {"tracked_feature_target", [&](auto& k, auto& v) { cfg.sim.tracked_feature_target = static_cast<int>(parse_int(k, v)); }},
      {"pixel_sigma", [&](auto& k, auto& v) { cfg.sim.pixel_sigma = parse_double(k, v); }},
      {"pixel_bias_fraction", [&](auto& k, auto& v) { cfg.sim.pixel_bias_fraction = parse_double(k, v); }},
      {"image_width", [&](auto& k, auto& v) { cfg.sim.image_width = static_cast<int>(parse_int(k, v)); }},
      {"image_height", [&](auto& k, auto& v) { cfg.sim.image_height = static_cast<int>(parse_int(k, v)); }},
      {"fx", [&](auto& k, auto& v) { cfg.sim.intrinsics.fx = parse_double(k, v); }},
      {"fy", [&](auto& k, auto& v) { cfg.sim.intrinsics.fy = parse_double(k, v); }},
      {"cx", [&](auto& k, auto& v) { cfg.sim.intrinsics.cx = parse_double(k, v); }},
      {"cy", [&](auto& k, auto& v) { cfg.sim.intrinsics.cy = parse_double(k, v); }},
      {"min_depth", [&](auto& k, auto& v) { cfg.sim.min_depth = parse_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.sim.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"trajectory", [&](auto&, auto& v) { cfg.trajectory = v; }},
      {"duration", [&](auto& k, auto& v) { cfg.duration = parse_double(k, v); }},
      {"model_noise_var", [&](auto& k, auto& v) { cfg.noise.model_accel_var = parse_double(k, v); }},
      {"accel_bias_rw", [&](auto& k, auto& v) { cfg.noise.accel_bias_rw = parse_double(k, v); }},
      {"gyro_bias_rw", [&](auto& k, auto& v) { cfg.noise.gyro_bias_rw = parse_double(k, v); }},
      {"init_pos_var", [&](auto& k, auto& v) { cfg.init_cov.pos_var = parse_double(k, v); }},
      {"init_att_var", [&](auto& k, auto& v) { cfg.init_cov.att_var = parse_double(k, v); }},
      {"init_yaw_var", [&](auto& k, auto& v) { cfg.init_cov.yaw_var = parse_double(k, v); }},
      {"init_vel_var", [&](auto& k, auto& v) { cfg.init_cov.vel_var = parse_double(k, v); }},
      {"init_accel_bias_var", [&](auto& k, auto& v) { cfg.init_cov.accel_bias_var = parse_double(k, v); }},
      {"init_gyro_bias_var", [&](auto& k, auto& v) { cfg.init_cov.gyro_bias_var = parse_double(k, v); }},
      {"accel_gate_sigma", [&](auto& k, auto& v) { cfg.ekf.accel_gate_sigma = parse_double(k, v); }},
      {"vision_gate_threshold", [&](auto& k, auto& v) { cfg.ekf.vision_gate_threshold = parse_double(k, v); }},
      {"vision_gate_raw", [&](auto& k, auto& v) { cfg.ekf.vision_gate_raw = parse_bool(k, v); }},
      {"rvo_floor", [&](auto& k, auto& v) { cfg.ekf.rvo_floor = parse_double(k, v); }},
      {"pixel_sigma_floor", [&](auto& k, auto& v) { cfg.ekf.pixel_sigma_floor = parse_double(k, v); }},
      {"vision_noise_inflation", [&](auto& k, auto& v) { cfg.ekf.vision_noise_inflation = parse_double(k, v); }},
      {"low_baseline_inflation", [&](auto& k, auto& v) { cfg.ekf.low_baseline_inflation = parse_double(k, v); }},
      {"gimbal_guard", [&](auto& k, auto& v) { cfg.ekf.gimbal_guard = parse_double(k, v); }},
      {"use_fej", [&](auto& k, auto& v) { cfg.ekf.use_fej = parse_bool(k, v); }},
      {"vision_enabled", [&](auto& k, auto& v) { cfg.modes.vision = parse_bool(k, v); }},
      {"keyframes_enabled", [&](auto& k, auto& v) { cfg.modes.keyframes = parse_bool(k, v); }},
      {"disparity_threshold_px", [&](auto& k, auto& v) { cfg.keyframe.disparity_threshold_px = parse_double(k, v); }},
      {"min_pairs", [&](auto& k, auto& v) { cfg.keyframe.min_pairs = static_cast<int>(parse_int(k, v)); }},
      {"snapshot_horizon", [&](auto& k, auto& v) { cfg.pipeline.snapshot_horizon = parse_double(k, v); }},
      {"true_accel_bias_x", [&](auto& k, auto& v) { tba.x() = parse_double(k, v); has_tba = true; }},
      {"true_accel_bias_y", [&](auto& k, auto& v) { tba.y() = parse_double(k, v); has_tba = true; }},
      {"true_accel_bias_z", [&](auto& k, auto& v) { tba.z() = parse_double(k, v); has_tba = true; }},
      {"true_gyro_bias_x", [&](auto& k, auto& v) { tbg.x() = parse_double(k, v); has_tbg = true; }},
      {"true_gyro_bias_y", [&](auto& k, auto& v) { tbg.y() = parse_double(k, v); has_tbg = true; }},
      {"true_gyro_bias_z", [&](auto& k, auto& v) { tbg.z() = parse_double(k, v); has_tbg = true; }},
  };

  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown config key '" + key + "'");
    }
    it->second(key, value);
  }

  if (has_tba) {
    cfg.true_accel_bias = tba;
  }
  if (has_tbg) {
    cfg.true_gyro_bias = tbg;
  }
  cfg.sim.validate();
  cfg.finalize();
  return cfg;
}

void RunConfig::finalize() {
  ekf.gravity = sim.gravity;
  ekf.drag_k1 = sim.drag_k1;
  ekf.max_dt = 2.0 / sim.imu_rate;
  noise.accel_var = sim.accel_noise_var;
  noise.gyro_var = sim.gyro_noise_var;
  // Per-track localization bias cancels between the key-frame snapshot and
  // the current observation; the pair-relevant noise is the fresh jitter.
  noise.pixel_sigma = sim.pixel_jitter_sigma();
  pipeline.match_tolerance = 0.5 / sim.imu_rate;
}

sim::Trajectory RunConfig::make_trajectory() const {
  std::vector<sim::TrajectorySegment> segments;
  if (trajectory == "standard") {
    segments = sim::standard_mission();
  } else if (trajectory == "hover") {
    segments = sim::hover_mission();
  } else {
    throw ConfigError("unknown trajectory preset '" + trajectory + "'");
  }
  double total = 0.0;
  for (const auto& s : segments) {
    total += s.duration;
  }
  if (duration > total) {
    segments.push_back(sim::TrajectorySegment::hover(duration - total));
  }
  return sim::Trajectory(std::move(segments), Vec3::Zero(), 0.0, sim.gravity,
                         sim.drag_k1);
}

double RunConfig::effective_duration() const {
  if (duration > 0.0) {
    return duration;
  }
  double total = 0.0;
  if (trajectory == "standard") {
    for (const auto& s : sim::standard_mission()) total += s.duration;
  } else if (trajectory == "hover") {
    for (const auto& s : sim::hover_mission()) total += s.duration;
  } else {
    throw ConfigError("unknown trajectory preset '" + trajectory + "'");
  }
  return total;
}

std::string RunConfig::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << "# quadvio run configuration (resolved)\n";
  out << "mass = " << sim.mass << "\n";
  out << "drag_k1 = " << sim.drag_k1 << "\n";
  out << "gravity = " << sim.gravity << "\n";
  out << "accel_noise_var = " << sim.accel_noise_var << "\n";
  out << "gyro_noise_var = " << sim.gyro_noise_var << "\n";
  out << "accel_bias_sigma = " << sim.accel_bias_sigma << "\n";
  out << "gyro_bias_sigma = " << sim.gyro_bias_sigma << "\n";
  out << "imu_rate = " << sim.imu_rate << "\n";
  out << "camera_rate = " << sim.camera_rate << "\n";
  out << "world_x = " << sim.world_extent.x() << "\n";
  out << "world_y = " << sim.world_extent.y() << "\n";
  out << "world_z = " << sim.world_extent.z() << "\n";
  out << "feature_count = " << sim.feature_count << "\n";
  out << "min_tracked_features = " << sim.min_tracked_features << "\n";
  out << "tracked_feature_target = " << sim.tracked_feature_target << "\n";
  out << "pixel_sigma = " << sim.pixel_sigma << "\n";
  out << "pixel_bias_fraction = " << sim.pixel_bias_fraction << "\n";
  out << "image_width = " << sim.image_width << "\n";
  out << "image_height = " << sim.image_height << "\n";
  out << "fx = " << sim.intrinsics.fx << "\n";
  out << "fy = " << sim.intrinsics.fy << "\n";
  out << "cx = " << sim.intrinsics.cx << "\n";
  out << "cy = " << sim.intrinsics.cy << "\n";
  out << "min_depth = " << sim.min_depth << "\n";
  out << "seed = " << sim.seed << "\n";
  out << "trajectory = " << trajectory << "\n";
  out << "duration = " << duration << "\n";
  out << "model_noise_var = " << noise.model_accel_var << "\n";
  out << "accel_bias_rw = " << noise.accel_bias_rw << "\n";
  out << "gyro_bias_rw = " << noise.gyro_bias_rw << "\n";
  out << "init_pos_var = " << init_cov.pos_var << "\n";
  out << "init_att_var = " << init_cov.att_var << "\n";
  out << "init_yaw_var = " << init_cov.yaw_var << "\n";
  out << "init_vel_var = " << init_cov.vel_var << "\n";
  out << "init_accel_bias_var = " << init_cov.accel_bias_var << "\n";
  out << "init_gyro_bias_var = " << init_cov.gyro_bias_var << "\n";
  out << "accel_gate_sigma = " << ekf.accel_gate_sigma << "\n";
  out << "vision_gate_threshold = " << ekf.vision_gate_threshold << "\n";
  out << "vision_gate_raw = " << (ekf.vision_gate_raw ? "true" : "false") << "\n";
  out << "rvo_floor = " << ekf.rvo_floor << "\n";
  out << "pixel_sigma_floor = " << ekf.pixel_sigma_floor << "\n";
  out << "vision_noise_inflation = " << ekf.vision_noise_inflation << "\n";
  out << "low_baseline_inflation = " << ekf.low_baseline_inflation << "\n";
  out << "gimbal_guard = " << ekf.gimbal_guard << "\n";
  out << "use_fej = " << (ekf.use_fej ? "true" : "false") << "\n";
  out << "vision_enabled = " << (modes.vision ? "true" : "false") << "\n";
  out << "keyframes_enabled = " << (modes.keyframes ? "true" : "false") << "\n";
  out << "disparity_threshold_px = " << keyframe.disparity_threshold_px << "\n";
  out << "min_pairs = " << keyframe.min_pairs << "\n";
  out << "snapshot_horizon = " << pipeline.snapshot_horizon << "\n";
  if (true_accel_bias) {
    out << "true_accel_bias_x = " << true_accel_bias->x() << "\n";
    out << "true_accel_bias_y = " << true_accel_bias->y() << "\n";
    out << "true_accel_bias_z = " << true_accel_bias->z() << "\n";
  }
  if (true_gyro_bias) {
    out << "true_gyro_bias_x = " << true_gyro_bias->x() << "\n";
    out << "true_gyro_bias_y = " << true_gyro_bias->y() << "\n";
    out << "true_gyro_bias_z = " << true_gyro_bias->z() << "\n";
  }
  return out.str();
}

void RunConfig::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write config file: " + path);
  }
  out << to_string();
}

}  // namespace quadvio::io
