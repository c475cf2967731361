#include "quadvio/io/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace quadvio::io {

namespace {

using nlohmann::json;

json axis_json(const std::array<AxisMetrics, 3>& m,
               const std::array<const char*, 3>& names) {
  json out;
  for (int i = 0; i < 3; ++i) {
    out[names[i]] = {{"rmse", m[i].rmse},
                     {"coverage_2sigma", m[i].coverage_2sigma}};
  }
  return out;
}

}  // namespace

MetricsReport evaluate_metrics(const std::vector<EstimateRow>& estimates,
                               const std::vector<sim::TruthSample>& truth,
                               const std::optional<Vec3>& true_accel_bias,
                               const std::optional<Vec3>& true_gyro_bias,
                               ErrorSeries* series) {
  if (estimates.empty() || estimates.size() != truth.size()) {
    throw DataError("estimate and ground-truth traces have different lengths (" +
                    std::to_string(estimates.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  }

  const std::size_t n = estimates.size();
  VecX sq_sum = VecX::Zero(kNominalDim);
  VecX covered = VecX::Zero(kNominalDim);
  double nees_vel_sum = 0.0, nees_att_sum = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const EstimateRow& e = estimates[i];
    const sim::TruthSample& g = truth[i];
    if (std::abs(e.t - g.t) > 1e-9) {
      throw DataError("misaligned timestamps at row " + std::to_string(i) +
                      ": " + std::to_string(e.t) + " vs " +
                      std::to_string(g.t));
    }

    VecX err = VecX::Zero(kNominalDim);
    err.segment<3>(kIdxPos) = e.position - g.position;
    for (int j = 0; j < 3; ++j) {
      err(kIdxAtt + j) = wrap_angle(e.attitude(j) - g.attitude.vec()(j));
    }
    err.segment<3>(kIdxVel) = e.velocity_body - g.velocity_body;
    if (true_accel_bias) {
      err.segment<3>(kIdxBa) = e.accel_bias - *true_accel_bias;
    }
    if (true_gyro_bias) {
      err.segment<3>(kIdxBg) = e.gyro_bias - *true_gyro_bias;
    }

    sq_sum += err.cwiseProduct(err);
    double nees_vel = 0.0, nees_att = 0.0;
    for (int j = 0; j < kNominalDim; ++j) {
      if (std::abs(err(j)) <= 2.0 * e.marginal_std(j)) {
        covered(j) += 1.0;
      }
    }
    for (int j = 0; j < 3; ++j) {
      const double sv = e.marginal_std(kIdxVel + j);
      const double sa = e.marginal_std(kIdxAtt + j);
      if (sv > 0.0) {
        nees_vel += err(kIdxVel + j) * err(kIdxVel + j) / (sv * sv);
      }
      if (sa > 0.0) {
        nees_att += err(kIdxAtt + j) * err(kIdxAtt + j) / (sa * sa);
      }
    }
    nees_vel_sum += nees_vel;
    nees_att_sum += nees_att;

    if (series) {
      series->t.push_back(e.t);
      series->error.push_back(err);
      VecX two_sigma = VecX(kNominalDim);
      for (int j = 0; j < kNominalDim; ++j) {
        two_sigma(j) = 2.0 * e.marginal_std(j);
      }
      series->two_sigma.push_back(std::move(two_sigma));
      series->nees_velocity.push_back(nees_vel);
      series->nees_attitude.push_back(nees_att);
    }
  }

  MetricsReport report;
  report.samples = n;
  auto fill = [&](std::array<AxisMetrics, 3>& out, int base) {
    for (int j = 0; j < 3; ++j) {
      out[j].rmse = std::sqrt(sq_sum(base + j) / static_cast<double>(n));
      out[j].coverage_2sigma = covered(base + j) / static_cast<double>(n);
    }
  };
  fill(report.position, kIdxPos);
  fill(report.attitude, kIdxAtt);
  fill(report.velocity, kIdxVel);
  if (true_accel_bias) {
    report.accel_bias.emplace();
    fill(*report.accel_bias, kIdxBa);
  }
  if (true_gyro_bias) {
    report.gyro_bias.emplace();
    fill(*report.gyro_bias, kIdxBg);
  }
  report.mean_nees_velocity = nees_vel_sum / static_cast<double>(n);
  report.mean_nees_attitude = nees_att_sum / static_cast<double>(n);
  return report;
}

void write_metrics(const std::string& dir, const MetricsReport& report,
                   const ErrorSeries& series) {
  std::filesystem::create_directories(dir);

  json j;
  j["samples"] = report.samples;
  j["position"] = axis_json(report.position, {"x", "y", "z"});
  j["attitude"] = axis_json(report.attitude, {"roll", "pitch", "yaw"});
  j["velocity"] = axis_json(report.velocity, {"x", "y", "z"});
  if (report.accel_bias) {
    j["accel_bias"] = axis_json(*report.accel_bias, {"x", "y", "z"});
  }
  if (report.gyro_bias) {
    j["gyro_bias"] = axis_json(*report.gyro_bias, {"x", "y", "z"});
  }
  j["mean_nees_velocity"] = report.mean_nees_velocity;
  j["mean_nees_attitude"] = report.mean_nees_attitude;
  std::ofstream jf(dir + "/metrics.json");
  if (!jf) {
    throw DataError("cannot write metrics.json in " + dir);
  }
  jf << j.dump(2) << '\n';

  const char* names[] = {"px", "py", "pz", "roll", "pitch", "yaw",
                         "vx", "vy", "vz", "bax",  "bay",   "baz",
                         "bgx", "bgy", "bgz"};
  std::ofstream ef(dir + "/errors.csv");
  if (!ef) {
    throw DataError("cannot write errors.csv in " + dir);
  }
  ef.precision(17);
  ef << "t_s";
  for (const char* nm : names) {
    ef << ",err_" << nm;
  }
  for (const char* nm : names) {
    ef << ",two_sigma_" << nm;
  }
  ef << '\n';
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    ef << series.t[i];
    for (int j = 0; j < kNominalDim; ++j) {
      ef << ',' << series.error[i](j);
    }
    for (int j = 0; j < kNominalDim; ++j) {
      ef << ',' << series.two_sigma[i](j);
    }
    ef << '\n';
  }

  std::ofstream nf(dir + "/nees.csv");
  if (!nf) {
    throw DataError("cannot write nees.csv in " + dir);
  }
  nf.precision(17);
  nf << "t_s,nees_velocity,nees_attitude\n";
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    nf << series.t[i] << ',' << series.nees_velocity[i] << ','
       << series.nees_attitude[i] << '\n';
  }
}

std::string format_metrics_table(const MetricsReport& report) {
  std::ostringstream out;
  auto row = [&](const char* name, const AxisMetrics& m) {
    out << "  " << name;
    for (std::size_t i = std::string(name).size(); i < 12; ++i) {
      out << ' ';
    }
    char buf[80];
    std::snprintf(buf, sizeof(buf), "rmse %12.6g   2sigma-coverage %6.1f%%\n",
                  m.rmse, 100.0 * m.coverage_2sigma);
    out << buf;
  };
  out << "metrics over " << report.samples << " samples\n";
  const char* pos[] = {"pos x [m]", "pos y [m]", "pos z [m]"};
  const char* att[] = {"roll [rad]", "pitch [rad]", "yaw [rad]"};
  const char* vel[] = {"vel x [m/s]", "vel y [m/s]", "vel z [m/s]"};
  for (int i = 0; i < 3; ++i) row(pos[i], report.position[i]);
  for (int i = 0; i < 3; ++i) row(att[i], report.attitude[i]);
  for (int i = 0; i < 3; ++i) row(vel[i], report.velocity[i]);
  if (report.accel_bias) {
    const char* ba[] = {"ba x [m/s2]", "ba y [m/s2]", "ba z [m/s2]"};
    for (int i = 0; i < 3; ++i) row(ba[i], (*report.accel_bias)[i]);
  }
  if (report.gyro_bias) {
    const char* bg[] = {"bg x [rad/s]", "bg y [rad/s]", "bg z [rad/s]"};
    for (int i = 0; i < 3; ++i) row(bg[i], (*report.gyro_bias)[i]);
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "  mean NEES (diag): velocity %.3f  attitude %.3f\n",
                report.mean_nees_velocity, report.mean_nees_attitude);
  out << buf;
  return out.str();
}

}  // namespace quadvio::io
