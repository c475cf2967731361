#include "quadvio/ekf/state.hpp"

#include <algorithm>

#include <Eigen/Cholesky>

namespace quadvio {

int KeyframeAnchor::snapshot_index(int id) const {
  const auto it = std::lower_bound(
      snapshot.begin(), snapshot.end(), id,
      [](const std::pair<int, Vec2>& entry, int key) { return entry.first < key; });
  if (it == snapshot.end() || it->first != id) {
    return -1;
  }
  return static_cast<int>(it - snapshot.begin());
}

VecX FilterState::vector() const {
  VecX x(dim());
  x.segment<3>(kIdxPos) = position;
  x.segment<3>(kIdxAtt) = attitude.vec();
  x.segment<3>(kIdxVel) = velocity_body;
  x.segment<3>(kIdxBa) = accel_bias;
  x.segment<3>(kIdxBg) = gyro_bias;
  if (anchor) {
    x.segment<3>(kIdxAnchorPos) = anchor->pose.position;
    x.segment<3>(kIdxAnchorAtt) = anchor->pose.attitude.vec();
  }
  return x;
}

void FilterState::apply_delta(const VecX& dx) {
  position += dx.segment<3>(kIdxPos);
  attitude = EulerAngles::from_vec(attitude.vec() + dx.segment<3>(kIdxAtt))
                 .normalized();
  velocity_body += dx.segment<3>(kIdxVel);
  accel_bias += dx.segment<3>(kIdxBa);
  gyro_bias += dx.segment<3>(kIdxBg);
  if (anchor && dx.size() == kAugmentedDim) {
    anchor->pose.position += dx.segment<3>(kIdxAnchorPos);
    anchor->pose.attitude =
        EulerAngles::from_vec(anchor->pose.attitude.vec() +
                              dx.segment<3>(kIdxAnchorAtt))
            .normalized();
  }
}

MatX InitialCovariance::matrix() const {
  VecX d(kNominalDim);
  d.segment<3>(kIdxPos).setConstant(pos_var);
  d.segment<3>(kIdxAtt) << att_var, att_var, yaw_var;
  d.segment<3>(kIdxVel).setConstant(vel_var);
  d.segment<3>(kIdxBa).setConstant(accel_bias_var);
  d.segment<3>(kIdxBg).setConstant(gyro_bias_var);
  return d.asDiagonal();
}

bool covariance_valid(const MatX& P, double sym_tol, double jitter) {
  if (P.rows() != P.cols()) {
    return false;
  }
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    return false;
  }
  const MatX sym = 0.5 * (P + P.transpose()) +
                   jitter * MatX::Identity(P.rows(), P.cols());
  return Eigen::LLT<MatX>(sym).info() == Eigen::Success;
}

}  // namespace quadvio
