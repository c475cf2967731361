#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace quadvio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using RowVecX = Eigen::RowVectorXd;

/// Bad run configuration (unparseable file, unknown key, infeasible value).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (logs, streams).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Estimator left its operating envelope (gimbal guard, covariance failure).
struct EstimatorFault : std::runtime_error {
  explicit EstimatorFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace quadvio
