#include "quadvio/pipeline/estimator_core.hpp"

#include <algorithm>
#include <numeric>

namespace quadvio {

EstimatorCore::EstimatorCore(const EkfParams& ekf_params,
                             const NoiseParams& noise,
                             const KeyframePolicyConfig& policy,
                             const CameraIntrinsics& intrinsics,
                             const EstimatorModes& modes,
                             const FilterState& initial_state,
                             const MatX& initial_cov)
    : ekf_(ekf_params, noise),
      policy_(policy),
      intrinsics_(intrinsics),
      modes_(modes),
      state_(initial_state),
      P_(initial_cov) {}

Estimate EstimatorCore::estimate() const {
  Estimate e;
  e.t = t_;
  e.state = state_;
  e.marginal_std = P_.diagonal().head(kNominalDim).cwiseMax(0.0).cwiseSqrt();
  return e;
}

Estimate EstimatorCore::process_imu(const ImuSample& sample) {
  if (!clock_initialized_) {
    t_ = sample.t;
    prev_imu_ = sample;
    clock_initialized_ = true;
    ekf_.update_accel(state_, P_, sample.accel.head<2>());
    ++diag_.imu_steps;
    return estimate();
  }
  if (sample.t <= t_) {
    ++diag_.imu_dropped;
    return estimate();
  }
  const double dt = sample.t - t_;

  // Trapezoidal input over the interval; the previous sample is held as the
  // other endpoint.
  ImuSample held;
  held.t = t_;
  held.accel = 0.5 * (prev_imu_.accel + sample.accel);
  held.gyro = 0.5 * (prev_imu_.gyro + sample.gyro);

  ekf_.predict(state_, P_, held, dt);
  ekf_.update_accel(state_, P_, sample.accel.head<2>());
  t_ = sample.t;
  prev_imu_ = sample;
  ++diag_.imu_steps;
  return estimate();
}

void EstimatorCore::process_frame(const FeatureObservation& obs,
                                  const std::atomic<std::uint64_t>* preempt,
                                  std::uint64_t preempt_baseline) {
  ++diag_.frames_processed;
  if (!modes_.vision) {
    return;
  }

  std::vector<CorrespondencePair> pairs;
  if (state_.anchor) {
    pairs = build_correspondences(state_.anchor->snapshot, obs);
  }
  const DisparityReport report = mean_disparity(pairs);
  const bool make_keyframe =
      modes_.keyframes ? should_create_keyframe(report, policy_) : true;

  if (!pairs.empty()) {
    // Process the most informative pairs first so a preempting frame costs
    // as little as possible: order by the initial Jacobian row norm.
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto eval = ekf_.epipolar_residual(state_, intrinsics_, pairs[i]);
      order.emplace_back(eval.jacobian.norm(), i);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    for (std::size_t n = 0; n < order.size(); ++n) {
      if (preempt && preempt->load(std::memory_order_relaxed) != preempt_baseline) {
        diag_.pairs_truncated += static_cast<long>(order.size() - n);
        break;
      }
      ekf_.visual_update(state_, P_, pairs[order[n].second], intrinsics_, obs.t);
      ++diag_.pairs_processed;
    }
  }

  if (make_keyframe) {
    ekf_.augment_state(state_, P_, snapshot_from_observation(obs), obs.t);
    ++diag_.keyframes_created;
  }
}

}  // namespace quadvio
