#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "quadvio/io/log_io.hpp"

namespace quadvio::io {

struct AxisMetrics {
  double rmse = 0.0;
  double coverage_2sigma = 0.0;  // fraction of |error| <= 2 * reported std
};

struct MetricsReport {
  std::array<AxisMetrics, 3> position;
  std::array<AxisMetrics, 3> attitude;  // roll, pitch, yaw
  std::array<AxisMetrics, 3> velocity;
  std::optional<std::array<AxisMetrics, 3>> accel_bias;  // needs true biases
  std::optional<std::array<AxisMetrics, 3>> gyro_bias;
  double mean_nees_velocity = 0.0;  // diagonal-approximation, 3 dof
  double mean_nees_attitude = 0.0;
  std::size_t samples = 0;
};

/// Per-timestep error series for the plot-ready CSV.
struct ErrorSeries {
  std::vector<double> t;
  std::vector<VecX> error;        // 15 per row (bias errors zero w/o truth)
  std::vector<VecX> two_sigma;    // 15 per row
  std::vector<double> nees_velocity;
  std::vector<double> nees_attitude;
};

/// Compare an estimate trace against ground truth (timestamps must align
/// pairwise within 1e-9 s). Pure function of its inputs.
MetricsReport evaluate_metrics(const std::vector<EstimateRow>& estimates,
                               const std::vector<sim::TruthSample>& truth,
                               const std::optional<Vec3>& true_accel_bias,
                               const std::optional<Vec3>& true_gyro_bias,
                               ErrorSeries* series = nullptr);

/// metrics.json plus plot-ready errors.csv and nees.csv.
void write_metrics(const std::string& dir, const MetricsReport& report,
                   const ErrorSeries& series);

/// Human-readable table.
std::string format_metrics_table(const MetricsReport& report);

}  // namespace quadvio::io
