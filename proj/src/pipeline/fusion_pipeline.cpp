#include "quadvio/pipeline/fusion_pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

namespace quadvio {

FusionPipeline::FusionPipeline(EstimatorCore core, const PipelineConfig& cfg)
    : cfg_(cfg), core_(std::move(core)) {
  worker_ = std::thread([this] { worker_loop(); });
}

FusionPipeline::~FusionPipeline() {
  {
    std::lock_guard lk(queue_mu_);
    stop_ = true;
  }
  queue_cv_.notify_all();
  worker_.join();
}

Estimate FusionPipeline::ingest_imu(const ImuSample& sample) {
  std::lock_guard lk(state_mu_);
  Estimate est = core_.process_imu(sample);
  snapshots_.emplace_back(core_.time(), core_);
  history_.push_back(sample);
  const double horizon_start = core_.time() - cfg_.snapshot_horizon;
  while (!snapshots_.empty() && snapshots_.front().first < horizon_start) {
    snapshots_.pop_front();
  }
  while (!history_.empty() && history_.front().t < horizon_start) {
    history_.pop_front();
  }
  return est;
}

void FusionPipeline::ingest_frame(const FeatureObservation& obs) {
  frame_seq_.fetch_add(1, std::memory_order_relaxed);
  {
    std::lock_guard lk(queue_mu_);
    frame_queue_.push_back(obs);
  }
  queue_cv_.notify_one();
}

void FusionPipeline::wait_idle() {
  std::unique_lock lk(queue_mu_);
  idle_cv_.wait(lk, [this] { return frame_queue_.empty() && !busy_; });
}

Estimate FusionPipeline::current_estimate() const {
  std::lock_guard lk(state_mu_);
  return core_.estimate();
}

EstimatorDiagnostics FusionPipeline::diagnostics() const {
  std::lock_guard lk(state_mu_);
  return core_.diagnostics();
}

Ekf::Counters FusionPipeline::ekf_counters() const {
  std::lock_guard lk(state_mu_);
  return core_.ekf().counters();
}

long FusionPipeline::frames_dropped() const {
  std::lock_guard lk(state_mu_);
  return frames_dropped_;
}

std::size_t FusionPipeline::snapshot_count() const {
  std::lock_guard lk(state_mu_);
  return snapshots_.size();
}

std::string FusionPipeline::last_error() const {
  std::lock_guard lk(state_mu_);
  return last_error_;
}

void FusionPipeline::worker_loop() {
  for (;;) {
    FeatureObservation obs;
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait(lk, [this] { return stop_ || !frame_queue_.empty(); });
      if (stop_ && frame_queue_.empty()) {
        return;
      }
      obs = std::move(frame_queue_.front());
      frame_queue_.pop_front();
      busy_ = true;
    }
    const std::uint64_t baseline = frame_seq_.load(std::memory_order_relaxed);
    try {
      process_one(obs, baseline);
    } catch (const std::exception& e) {
      std::lock_guard lk(state_mu_);
      ++frames_dropped_;
      last_error_ = e.what();
    }
    {
      std::lock_guard lk(queue_mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void FusionPipeline::process_one(const FeatureObservation& obs,
                                 std::uint64_t baseline) {
  EstimatorCore work;
  std::vector<ImuSample> to_replay;
  {
    std::lock_guard lk(state_mu_);
    auto it = std::lower_bound(
        snapshots_.begin(), snapshots_.end(), obs.t - cfg_.match_tolerance,
        [](const auto& entry, double t) { return entry.first < t; });
    if (it == snapshots_.end() ||
        std::abs(it->first - obs.t) > cfg_.match_tolerance) {
      ++frames_dropped_;
      return;
    }
    work = it->second;
    for (auto h = history_.begin(); h != history_.end(); ++h) {
      if (h->t > work.time()) {
        to_replay.push_back(*h);
      }
    }
  }

  const double stall = stall_seconds_.load();
  if (stall > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(stall));
  }

  work.process_frame(obs, &frame_seq_, baseline);

  // Re-apply the buffered IMU stream on the corrected state, collecting the
  // corrected snapshots for those timestamps.
  std::vector<std::pair<double, EstimatorCore>> corrected;
  corrected.reserve(to_replay.size() + 8);
  for (const ImuSample& s : to_replay) {
    work.process_imu(s);
    corrected.emplace_back(work.time(), work);
  }

  {
    std::lock_guard lk(state_mu_);
    // If the live head outran the snapshot horizon while we were busy, the
    // pruned gap makes this correction irreconcilable; abandon it.
    if (!history_.empty() && history_.front().t > work.time() &&
        history_.front().t > work.time() + 4.0 * cfg_.match_tolerance) {
      ++frames_dropped_;
      return;
    }
    // Samples that arrived while we were replaying.
    for (const ImuSample& s : history_) {
      if (s.t > work.time()) {
        work.process_imu(s);
        corrected.emplace_back(work.time(), work);
      }
    }
    // Overwrite the stale snapshots so later rewinds see this correction.
    auto ci = corrected.begin();
    for (auto& entry : snapshots_) {
      while (ci != corrected.end() && ci->first < entry.first - 1e-12) {
        ++ci;
      }
      if (ci == corrected.end()) {
        break;
      }
      if (std::abs(ci->first - entry.first) <= 1e-12) {
        entry.second = ci->second;
      }
    }
    core_ = std::move(work);
  }
}

}  // namespace quadvio
