#include "quadvio/ekf/filter.hpp"

#include <cmath>

namespace quadvio {

namespace {

const Vec3 kE3{0.0, 0.0, 1.0};

Mat3 lateral_drag(double k1) {
  Vec3 d{k1, k1, 0.0};
  return d.asDiagonal();
}

void symmetrize(MatX& P) { P = 0.5 * (P + P.transpose()).eval(); }

// Joseph-form measurement update, keeps P symmetric PSD.
void joseph_update(MatX& P, const MatX& K, const MatX& H, const MatX& R) {
  const MatX IKH = MatX::Identity(P.rows(), P.cols()) - K * H;
  P = IKH * P * IKH.transpose() + K * R * K.transpose();
  symmetrize(P);
}

}  // namespace

VecX Ekf::derivative(const FilterState& state, const ImuSample& imu) const {
  const Mat3 R_wb = euler_to_rotation(state.attitude, params_.gimbal_guard);
  const Vec3 omega = imu.gyro - state.gyro_bias;
  const double az = imu.accel.z() - state.accel_bias.z();

  VecX f = VecX::Zero(kNominalDim);
  f.segment<3>(kIdxPos) = R_wb * state.velocity_body;
  f.segment<3>(kIdxAtt) = xi_matrix(state.attitude, params_.gimbal_guard) * omega;
  f.segment<3>(kIdxVel) = params_.gravity * R_wb.transpose() * kE3 -
                          lateral_drag(params_.drag_k1) * state.velocity_body +
                          az * kE3 - omega.cross(state.velocity_body);
  return f;
}

MatX Ekf::dynamics_jacobian(const FilterState& state,
                            const ImuSample& imu) const {
  const Mat3 R_wb = euler_to_rotation(state.attitude, params_.gimbal_guard);
  const auto dR = euler_rotation_partials(state.attitude);
  const Vec3 omega = imu.gyro - state.gyro_bias;
  const Vec3& v = state.velocity_body;

  MatX A = MatX::Zero(kNominalDim, kNominalDim);
  for (int j = 0; j < 3; ++j) {
    A.block<3, 1>(kIdxPos, kIdxAtt + j) = dR[j] * v;
    A.block<3, 1>(kIdxVel, kIdxAtt + j) =
        params_.gravity * dR[j].transpose() * kE3;
  }
  A.block<3, 3>(kIdxPos, kIdxVel) = R_wb;
  A.block<3, 3>(kIdxAtt, kIdxAtt) = xi_times_vector_jacobian(state.attitude, omega);
  A.block<3, 3>(kIdxAtt, kIdxBg) = -xi_matrix(state.attitude, params_.gimbal_guard);
  A.block<3, 3>(kIdxVel, kIdxVel) = -lateral_drag(params_.drag_k1) - skew(omega);
  A(kIdxVel + 2, kIdxBa + 2) = -1.0;
  A.block<3, 3>(kIdxVel, kIdxBg) = -skew(v);
  return A;
}

MatX Ekf::process_noise(const FilterState& state, double dt) const {
  // Inputs: gyro noise (3), z-accelerometer noise (1), model error (3).
  // The variances are per-sample (each IMU reading carries that much noise),
  // so one held sample injects G * n * dt into the state: the discrete
  // process noise scales with dt^2, not dt.
  MatX G = MatX::Zero(kNominalDim, 7);
  const Mat3 Xi = xi_matrix(state.attitude, params_.gimbal_guard);
  G.block<3, 3>(kIdxAtt, 0) = Xi;
  G.block<3, 3>(kIdxVel, 0) = skew(state.velocity_body);
  G.block<3, 1>(kIdxVel, 3) = kE3;
  G.block<3, 3>(kIdxVel, 4) = Mat3::Identity();

  VecX qc(7);
  qc << noise_.gyro_var, noise_.gyro_var, noise_.gyro_var, noise_.accel_var,
      noise_.model_accel_var, noise_.model_accel_var, noise_.model_accel_var;

  MatX Q = G * qc.asDiagonal() * G.transpose() * dt * dt;
  Q.block<3, 3>(kIdxBa, kIdxBa) += noise_.accel_bias_rw * dt * Mat3::Identity();
  Q.block<3, 3>(kIdxBg, kIdxBg) += noise_.gyro_bias_rw * dt * Mat3::Identity();
  return Q;
}

void Ekf::predict(FilterState& state, MatX& P, const ImuSample& imu, double dt,
                  MatX* transition_out) const {
  if (dt <= 0.0) {
    throw DataError("predict: non-positive dt");
  }
  if (dt > params_.max_dt) {
    throw DataError("predict: dt exceeds the configured maximum");
  }
  if (!state.attitude.within_gimbal_guard(params_.gimbal_guard)) {
    throw EstimatorFault("predict: pitch hit the gimbal guard");
  }

  const int n = state.dim();
  if (P.rows() != n || P.cols() != n) {
    throw EstimatorFault("predict: covariance dimension mismatch");
  }

  try {
    // Heun step for the mean; the transition Jacobian is the exact
    // differential of that two-stage map so finite differences agree with it.
    const VecX k1 = derivative(state, imu);
    const MatX A1 = dynamics_jacobian(state, imu);

    FilterState mid = state;
    mid.apply_delta(dt * k1);
    const VecX k2 = derivative(mid, imu);
    const MatX A2 = dynamics_jacobian(mid, imu);

    VecX dx = VecX::Zero(n);
    dx.head(kNominalDim) = 0.5 * dt * (k1 + k2);
    state.apply_delta(dx);

    const MatX I15 = MatX::Identity(kNominalDim, kNominalDim);
    MatX F = MatX::Identity(n, n);
    F.topLeftCorner(kNominalDim, kNominalDim) =
        I15 + 0.5 * dt * (A1 + A2 * (I15 + dt * A1));

    MatX Q = MatX::Zero(n, n);
    Q.topLeftCorner(kNominalDim, kNominalDim) = process_noise(state, dt);

    P = F * P * F.transpose() + Q;
    symmetrize(P);
    if (transition_out) {
      *transition_out = F;
    }
  } catch (const std::domain_error& e) {
    throw EstimatorFault(std::string("predict: ") + e.what());
  }

  if (!state.attitude.within_gimbal_guard(params_.gimbal_guard)) {
    throw EstimatorFault("predict: pitch hit the gimbal guard");
  }
}

std::pair<Vec2, MatX> Ekf::accel_model(const FilterState& state) const {
  const double k1 = params_.drag_k1;
  Vec2 h{-k1 * state.velocity_body.x() + state.accel_bias.x(),
         -k1 * state.velocity_body.y() + state.accel_bias.y()};
  MatX H = MatX::Zero(2, state.dim());
  H(0, kIdxVel) = -k1;
  H(1, kIdxVel + 1) = -k1;
  H(0, kIdxBa) = 1.0;
  H(1, kIdxBa + 1) = 1.0;
  return {h, H};
}

bool Ekf::update_accel(FilterState& state, MatX& P, const Vec2& accel_xy) {
  const auto [h, H] = accel_model(state);
  const Vec2 r = accel_xy - h;
  last_accel_innovation_ = r;

  const Mat2 R = Vec2::Constant(noise_.accel_var).asDiagonal();
  const Mat2 S = H * P * H.transpose() + R;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(r(i)) > params_.accel_gate_sigma * std::sqrt(S(i, i))) {
      ++counters_.accel_rejected;
      return false;
    }
  }

  const MatX K = P * H.transpose() * S.inverse();
  state.apply_delta(K * r);
  joseph_update(P, K, H, R);
  return true;
}

Ekf::EpipolarEval Ekf::epipolar_residual(const FilterState& state,
                                         const CameraIntrinsics& K,
                                         const CorrespondencePair& pair) const {
  if (!state.anchor) {
    throw std::logic_error("epipolar_residual: no key-frame anchor");
  }
  const KeyframeAnchor& anchor = *state.anchor;
  // FEJ pins the anchor-position linearization (the translation-gauge and
  // scale protection); the anchor attitude stays at the current estimate,
  // where a frozen value was measured to slow the post-maneuver covariance
  // recovery considerably.
  KeyframePose fej_pose = anchor.pose;
  if (params_.use_fej) {
    fej_pose.position = anchor.first_estimate.position;
  }

  const Mat3 Ki = K.inverse();
  const Mat3 R_bc = params_.body_to_camera.transpose();
  const Vec3 u = Ki * pair.current_px.homogeneous();
  const Vec3 w = Ki * pair.keyframe_px.homogeneous();

  // World-frame rays through the two image points.
  const auto dR_cur = euler_rotation_partials(state.attitude);
  const Vec3 alpha =
      euler_to_rotation(state.attitude, params_.gimbal_guard) * R_bc * u;
  const Vec3 gamma =
      euler_to_rotation(anchor.pose.attitude, params_.gimbal_guard) * R_bc * w;

  const Vec3 p_d = anchor.pose.position - state.position;

  EpipolarEval eval;
  eval.residual = alpha.dot(p_d.cross(gamma));
  eval.degenerate = p_d.norm() < 1e-6;

  // Anchor-pose columns use the first-estimate anchor; everything else the
  // current estimate.
  const Vec3 gamma_fej =
      euler_to_rotation(fej_pose.attitude, params_.gimbal_guard) * R_bc * w;
  const Vec3 p_d_fej = fej_pose.position - state.position;
  const auto dR_fej = euler_rotation_partials(fej_pose.attitude);

  RowVecX J = RowVecX::Zero(kAugmentedDim);
  const Vec3 cross_cur = gamma.cross(alpha);
  J.segment<3>(kIdxPos) = -cross_cur.transpose();
  for (int j = 0; j < 3; ++j) {
    J(kIdxAtt + j) = (dR_cur[j] * R_bc * u).dot(p_d.cross(gamma));
  }
  J.segment<3>(kIdxAnchorPos) = gamma_fej.cross(alpha).transpose();
  for (int j = 0; j < 3; ++j) {
    J(kIdxAnchorAtt + j) = alpha.dot(p_d_fej.cross(dR_fej[j] * R_bc * w));
  }
  eval.jacobian = J;

  // Jacobian sensitivity to the measured pixels: the current one enters
  // through alpha = R_wc K^-1 p, the key-frame one through gamma.
  const Mat3 R_wc = euler_to_rotation(state.attitude, params_.gimbal_guard) * R_bc;
  const Mat3 R_wc_anchor =
      euler_to_rotation(anchor.pose.attitude, params_.gimbal_guard) * R_bc;
  const Mat3 R_wc_fej =
      euler_to_rotation(fej_pose.attitude, params_.gimbal_guard) * R_bc;
  auto jac_cur_pixel = [&](const Vec3& kcol) {
    const Vec3 da = R_wc * kcol;
    RowVecX m = RowVecX::Zero(kAugmentedDim);
    m.segment<3>(kIdxPos) = -gamma.cross(da).transpose();
    for (int j = 0; j < 3; ++j) {
      m(kIdxAtt + j) = (dR_cur[j] * R_bc * kcol).dot(p_d.cross(gamma));
    }
    m.segment<3>(kIdxAnchorPos) = gamma_fej.cross(da).transpose();
    for (int j = 0; j < 3; ++j) {
      m(kIdxAnchorAtt + j) = da.dot(p_d_fej.cross(dR_fej[j] * R_bc * w));
    }
    return m;
  };
  auto jac_key_pixel = [&](const Vec3& kcol) {
    const Vec3 dg = R_wc_anchor * kcol;
    const Vec3 dg_fej = R_wc_fej * kcol;
    RowVecX m = RowVecX::Zero(kAugmentedDim);
    m.segment<3>(kIdxPos) = -dg.cross(alpha).transpose();
    for (int j = 0; j < 3; ++j) {
      m(kIdxAtt + j) = (dR_cur[j] * R_bc * u).dot(p_d.cross(dg));
    }
    m.segment<3>(kIdxAnchorPos) = dg_fej.cross(alpha).transpose();
    for (int j = 0; j < 3; ++j) {
      m(kIdxAnchorAtt + j) = alpha.dot(p_d_fej.cross(dR_fej[j] * R_bc * kcol));
    }
    return m;
  };
  eval.jacobian_du = jac_cur_pixel(Ki.col(0));
  eval.jacobian_dv = jac_cur_pixel(Ki.col(1));
  eval.jacobian_dku = jac_key_pixel(Ki.col(0));
  eval.jacobian_dkv = jac_key_pixel(Ki.col(1));
  return eval;
}

Mat3 Ekf::estimated_essential(const FilterState& state) const {
  const KeyframeAnchor& anchor = *state.anchor;
  const Mat3 R_cw_cur =
      params_.body_to_camera *
      euler_to_rotation(state.attitude, params_.gimbal_guard).transpose();
  const Mat3 R_cw_prev =
      params_.body_to_camera *
      euler_to_rotation(anchor.pose.attitude, params_.gimbal_guard).transpose();
  return essential_from_relative_pose(R_cw_cur, R_cw_prev,
                                      anchor.pose.position - state.position);
}

Vec3 Ekf::epipolar_g(const FilterState& state, const CameraIntrinsics& K,
                     const CorrespondencePair& pair) const {
  const Mat3 Ki = K.inverse();
  return Ki.transpose() * estimated_essential(state) * Ki *
         pair.keyframe_px.homogeneous();
}

double Ekf::visual_noise_variance(const FilterState& state,
                                  const CameraIntrinsics& K,
                                  const CorrespondencePair& pair) const {
  if (!state.anchor) {
    throw std::logic_error("visual_noise_variance: no key-frame anchor");
  }
  const Vec3 g = epipolar_g(state, K, pair);
  const double sigma =
      std::max(noise_.pixel_sigma, params_.pixel_sigma_floor);
  const double var = sigma * sigma * (g.x() * g.x() + g.y() * g.y());
  return std::max(var, params_.rvo_floor);
}

bool Ekf::gate_outlier(double residual, double innovation_var) const {
  if (params_.vision_gate_raw) {
    return std::abs(residual) <=
           params_.vision_gate_threshold * noise_.pixel_sigma;
  }
  return std::abs(residual) <=
         params_.vision_gate_threshold * std::sqrt(innovation_var);
}

bool Ekf::visual_update(FilterState& state, MatX& P,
                        const CorrespondencePair& pair,
                        const CameraIntrinsics& K, double frame_time) {
  const EpipolarEval eval = epipolar_residual(state, K, pair);
  if (eval.degenerate) {
    ++counters_.degenerate_pairs;
  }
  const double rvo = visual_noise_variance(state, K, pair);
  const RowVecX& H = eval.jacobian;

  // Pixel noise also perturbs the Jacobian row itself; near-degenerate
  // geometry (hover, pure translation onset) is exactly where that term is
  // the real error budget, so fold it into the measurement noise.
  const double sigma =
      std::max(noise_.pixel_sigma, params_.pixel_sigma_floor);
  const double jac_noise =
      sigma * sigma *
      ((eval.jacobian_du * P * eval.jacobian_du.transpose())(0, 0) +
       (eval.jacobian_dv * P * eval.jacobian_dv.transpose())(0, 0) +
       (eval.jacobian_dku * P * eval.jacobian_dku.transpose())(0, 0) +
       (eval.jacobian_dkv * P * eval.jacobian_dkv.transpose())(0, 0));

  // The key-frame pixel is one noisy measurement reused by every frame until
  // re-anchoring. Its variance enters through dh/d(keyframe pixel), scaled by
  // the squared use count so the total information drawn from that single
  // datum stays bounded across reuses (sum 1/n^2 converges).
  double kf_pixel_noise = 0.0;
  {
    KeyframeAnchor& anchor = *state.anchor;
    int uses = 1;
    const int idx = anchor.snapshot_index(pair.id);
    if (idx >= 0 && idx < static_cast<int>(anchor.snapshot_use_counts.size())) {
      uses = ++anchor.snapshot_use_counts[idx];
    }
    const Mat3 Ki = K.inverse();
    const Vec3 q = Ki.transpose() * estimated_essential(state).transpose() *
                   Ki * pair.current_px.homogeneous();
    kf_pixel_noise = static_cast<double>(uses) * sigma * sigma *
                     (q.x() * q.x() + q.y() * q.y());
  }

  double baseline_penalty = 0.0;
  {
    const Vec3 p_d = state.anchor->pose.position - state.position;
    const double len2 = std::max(p_d.squaredNorm(), 1e-12);
    const Vec3 u_dir = p_d / std::sqrt(len2);
    const Mat3 P_rel = P.block<3, 3>(kIdxPos, kIdxPos) +
                       P.block<3, 3>(kIdxAnchorPos, kIdxAnchorPos) -
                       P.block<3, 3>(kIdxPos, kIdxAnchorPos) -
                       P.block<3, 3>(kIdxAnchorPos, kIdxPos);
    const double rel_var = std::max(0.0, u_dir.dot(P_rel * u_dir));
    baseline_penalty = params_.low_baseline_inflation * rel_var / len2;

    // A pair whose measured disparity still sits at the noise floor against
    // a key frame held for several seconds is direct evidence the camera has
    // not moved; holding the state to the anchor is then genuine
    // information, not a linearization artifact, and the penalty would only
    // discard it. The age requirement keeps freshly created key frames (tiny
    // disparity by construction, even in motion) out of this path.
    const double disparity = std::hypot(pair.current_px.u - pair.keyframe_px.u,
                                        pair.current_px.v - pair.keyframe_px.v);
    const double anchor_age =
        std::isfinite(frame_time) ? frame_time - state.anchor->image_time : 0.0;
    if (disparity < 3.0 * sigma * std::sqrt(2.0) && anchor_age > 2.0) {
      baseline_penalty = 0.0;
    }
  }
  const double r_eff = params_.vision_noise_inflation *
                       (1.0 + baseline_penalty) *
                       (rvo + jac_noise + kf_pixel_noise);
  const double S = (H * P * H.transpose())(0, 0) + r_eff;
  if (!std::isfinite(S) || S <= 0.0) {
    ++counters_.vision_rejected;
    return false;
  }

  // Perfect-measurement fusion: the measured value of the constraint is 0.
  const double innovation = -eval.residual;
  if (!gate_outlier(eval.residual, S)) {
    ++counters_.vision_rejected;
    return false;
  }

  const VecX Kg = P * H.transpose() / S;

  // The applied correction is -P E[H^T h]/S. The same pixel noise sits in
  // both H and h, so E[H^T h] carries a covariance term beyond the wanted
  // H^T E[h]; left alone, it rectifies into a drift that shrinks the
  // estimated baseline toward the absorbing p_d = 0 state. Both pixel
  // gradients are available in closed form, so subtract the drift exactly.
  const Vec3 g = epipolar_g(state, K, pair);
  const Mat3 Ki = K.inverse();
  const Vec3 q = Ki.transpose() * estimated_essential(state).transpose() * Ki *
                 pair.current_px.homogeneous();
  // Uses the true noise level: with exact pixels nothing rectifies and the
  // correction must vanish (the floor is only for the claimed precision).
  const double true_s2 = noise_.pixel_sigma * noise_.pixel_sigma;
  const RowVecX cov_Hh =
      true_s2 * (eval.jacobian_du * g.x() + eval.jacobian_dv * g.y() +
                 eval.jacobian_dku * q.x() + eval.jacobian_dkv * q.y());
  const VecX debias = P * cov_Hh.transpose() / S;

  state.apply_delta(Kg * innovation + debias);
  MatX Rm(1, 1);
  Rm(0, 0) = r_eff;
  joseph_update(P, Kg, H, Rm);
  ++counters_.vision_accepted;
  return true;
}

void Ekf::augment_state(FilterState& state, MatX& P,
                        std::vector<std::pair<int, Vec2>> snapshot,
                        double image_time) const {
  if (state.anchor) {
    drop_anchor(state, P);
  }
  KeyframeAnchor anchor;
  anchor.pose = {state.position, state.attitude};
  anchor.first_estimate = anchor.pose;
  anchor.image_time = image_time;
  anchor.snapshot = std::move(snapshot);
  anchor.snapshot_use_counts.assign(anchor.snapshot.size(), 0);
  state.anchor = std::move(anchor);

  MatX Pa(kAugmentedDim, kAugmentedDim);
  Pa.topLeftCorner(kNominalDim, kNominalDim) = P;
  Pa.topRightCorner(kNominalDim, 6) = P.leftCols(6);
  Pa.bottomLeftCorner(6, kNominalDim) = P.topRows(6);
  Pa.bottomRightCorner(6, 6) = P.topLeftCorner(6, 6);
  P = std::move(Pa);
}

void Ekf::drop_anchor(FilterState& state, MatX& P) const {
  if (!state.anchor) {
    return;
  }
  state.anchor.reset();
  P = P.topLeftCorner(kNominalDim, kNominalDim).eval();
}

}  // namespace quadvio
