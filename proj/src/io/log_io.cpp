#include "quadvio/io/log_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace quadvio::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write file: " + path);
  }
  out.precision(17);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  return in;
}

std::vector<double> split_doubles(const std::string& line,
                                  const std::string& path, int line_no,
                                  std::size_t expected) {
  std::vector<double> out;
  out.reserve(expected);
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const auto comma = line.find(',', pos);
    const std::string field =
        line.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": bad numeric field '" + field + "'");
    }
    if (comma == std::string::npos) {
      break;
    }
    pos = comma + 1;
  }
  if (out.size() != expected) {
    throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(expected) + " fields, got " +
                    std::to_string(out.size()));
  }
  return out;
}

}  // namespace

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& imu) {
  auto out = open_out(path);
  out << "t_s,ax,ay,az,gx,gy,gz\n";
  for (const ImuSample& s : imu) {
    out << s.t << ',' << s.accel.x() << ',' << s.accel.y() << ','
        << s.accel.z() << ',' << s.gyro.x() << ',' << s.gyro.y() << ','
        << s.gyro.z() << '\n';
  }
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<ImuSample> imu;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) {
      continue;  // header
    }
    const auto f = split_doubles(line, path, line_no, 7);
    ImuSample s;
    s.t = f[0];
    s.accel = Vec3(f[1], f[2], f[3]);
    s.gyro = Vec3(f[4], f[5], f[6]);
    imu.push_back(s);
  }
  return imu;
}

void write_features_jsonl(const std::string& path,
                          const std::vector<FeatureObservation>& frames) {
  auto out = open_out(path);
  for (const FeatureObservation& frame : frames) {
    json obs = json::array();
    for (const FeaturePoint& p : frame.points) {
      obs.push_back(json::array({p.id, p.u, p.v}));
    }
    json row{{"t", frame.t}, {"obs", std::move(obs)}};
    out << row.dump() << '\n';
  }
}

std::vector<FeatureObservation> read_features_jsonl(const std::string& path) {
  auto in = open_in(path);
  std::vector<FeatureObservation> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json row;
    try {
      row = json::parse(line);
      FeatureObservation frame;
      frame.t = row.at("t").get<double>();
      for (const auto& entry : row.at("obs")) {
        FeaturePoint p;
        p.id = entry.at(0).get<int>();
        p.u = entry.at(1).get<double>();
        p.v = entry.at(2).get<double>();
        frame.points.push_back(p);
      }
      frames.push_back(std::move(frame));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

void write_groundtruth_csv(const std::string& path,
                           const std::vector<sim::TruthSample>& truth) {
  auto out = open_out(path);
  out << "t_s,px,py,pz,roll,pitch,yaw,vx,vy,vz\n";
  for (const sim::TruthSample& s : truth) {
    out << s.t << ',' << s.position.x() << ',' << s.position.y() << ','
        << s.position.z() << ',' << s.attitude.roll << ',' << s.attitude.pitch
        << ',' << s.attitude.yaw << ',' << s.velocity_body.x() << ','
        << s.velocity_body.y() << ',' << s.velocity_body.z() << '\n';
  }
}

std::vector<sim::TruthSample> read_groundtruth_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<sim::TruthSample> truth;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) {
      continue;
    }
    const auto f = split_doubles(line, path, line_no, 10);
    sim::TruthSample s;
    s.t = f[0];
    s.position = Vec3(f[1], f[2], f[3]);
    s.attitude = EulerAngles{f[4], f[5], f[6]};
    s.velocity_body = Vec3(f[7], f[8], f[9]);
    truth.push_back(s);
  }
  return truth;
}

void write_estimates_csv(const std::string& path,
                         const std::vector<Estimate>& trace) {
  auto out = open_out(path);
  out << "t_s,px,py,pz,roll,pitch,yaw,vx,vy,vz,bax,bay,baz,bgx,bgy,bgz";
  const char* names[] = {"px", "py", "pz", "roll", "pitch", "yaw",
                         "vx", "vy", "vz", "bax",  "bay",   "baz",
                         "bgx", "bgy", "bgz"};
  for (const char* n : names) {
    out << ",std_" << n;
  }
  out << '\n';
  for (const Estimate& e : trace) {
    const FilterState& s = e.state;
    out << e.t << ',' << s.position.x() << ',' << s.position.y() << ','
        << s.position.z() << ',' << s.attitude.roll << ',' << s.attitude.pitch
        << ',' << s.attitude.yaw << ',' << s.velocity_body.x() << ','
        << s.velocity_body.y() << ',' << s.velocity_body.z() << ','
        << s.accel_bias.x() << ',' << s.accel_bias.y() << ','
        << s.accel_bias.z() << ',' << s.gyro_bias.x() << ','
        << s.gyro_bias.y() << ',' << s.gyro_bias.z();
    for (int i = 0; i < kNominalDim; ++i) {
      out << ',' << e.marginal_std(i);
    }
    out << '\n';
  }
}

std::vector<EstimateRow> read_estimates_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<EstimateRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) {
      continue;
    }
    const auto f = split_doubles(line, path, line_no, 31);
    EstimateRow r;
    r.t = f[0];
    r.position = Vec3(f[1], f[2], f[3]);
    r.attitude = Vec3(f[4], f[5], f[6]);
    r.velocity_body = Vec3(f[7], f[8], f[9]);
    r.accel_bias = Vec3(f[10], f[11], f[12]);
    r.gyro_bias = Vec3(f[13], f[14], f[15]);
    r.marginal_std = VecX(kNominalDim);
    for (int i = 0; i < kNominalDim; ++i) {
      r.marginal_std(i) = f[16 + i];
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_sim_log(const std::string& dir, const sim::SimLog& log,
                   const RunConfig& config) {
  std::filesystem::create_directories(dir);
  write_imu_csv(dir + "/imu.csv", log.imu);
  write_features_jsonl(dir + "/features.jsonl", log.frames);
  write_groundtruth_csv(dir + "/groundtruth.csv", log.truth);
  RunConfig resolved = config;
  resolved.true_accel_bias = log.true_accel_bias;
  resolved.true_gyro_bias = log.true_gyro_bias;
  resolved.write_file(dir + "/resolved_config.cfg");
}

LoadedLog read_sim_log(const std::string& dir) {
  LoadedLog loaded;
  try {
    loaded.config = RunConfig::from_file(dir + "/resolved_config.cfg");
  } catch (const ConfigError& e) {
    // a bad or absent resolved config means the log directory is unusable
    throw DataError(std::string("log directory ") + dir + ": " + e.what());
  }
  loaded.log.config = loaded.config.sim;
  loaded.log.imu = read_imu_csv(dir + "/imu.csv");
  loaded.log.frames = read_features_jsonl(dir + "/features.jsonl");
  loaded.log.truth = read_groundtruth_csv(dir + "/groundtruth.csv");
  if (loaded.config.true_accel_bias) {
    loaded.log.true_accel_bias = *loaded.config.true_accel_bias;
  }
  if (loaded.config.true_gyro_bias) {
    loaded.log.true_gyro_bias = *loaded.config.true_gyro_bias;
  }
  return loaded;
}

}  // namespace quadvio::io
