#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "quadvio/pipeline/estimator_core.hpp"

namespace quadvio {

struct PipelineConfig {
  double snapshot_horizon = 0.5;  // s of past states kept for rewinds
  double match_tolerance = 2.5e-3;  // s; capture-to-snapshot alignment
};

/// Two-path fusion: the IMU path owns the live filter and never waits on
/// vision work; the vision path rewinds to the snapshot at the image capture
/// time on a copy, applies the visual updates there, re-applies the buffered
/// IMU samples and commits the corrected head with a brief swap.
class FusionPipeline {
 public:
  FusionPipeline(EstimatorCore core, const PipelineConfig& cfg);
  ~FusionPipeline();

  FusionPipeline(const FusionPipeline&) = delete;
  FusionPipeline& operator=(const FusionPipeline&) = delete;

  /// Real-time path; returns the current estimate without blocking on vision.
  Estimate ingest_imu(const ImuSample& sample);

  /// Queue one camera frame for asynchronous processing. Capture time is the
  /// observation timestamp; frames older than the snapshot horizon are
  /// dropped and counted.
  void ingest_frame(const FeatureObservation& obs);

  /// Block until every queued frame has been fully processed and committed.
  void wait_idle();

  Estimate current_estimate() const;
  EstimatorDiagnostics diagnostics() const;
  Ekf::Counters ekf_counters() const;
  long frames_dropped() const;
  std::size_t snapshot_count() const;

  /// Message of the last vision-path failure, empty if none.
  std::string last_error() const;

  /// Test hook: sleep this long inside the vision path, outside any lock.
  void set_vision_stall(double seconds) { stall_seconds_.store(seconds); }

 private:
  void worker_loop();
  void process_one(const FeatureObservation& obs, std::uint64_t baseline);

  PipelineConfig cfg_;

  mutable std::mutex state_mu_;  // guards core_, snapshots_, history_
  EstimatorCore core_;
  std::deque<std::pair<double, EstimatorCore>> snapshots_;
  std::deque<ImuSample> history_;
  long frames_dropped_ = 0;
  std::string last_error_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<FeatureObservation> frame_queue_;
  bool stop_ = false;
  bool busy_ = false;
  std::atomic<std::uint64_t> frame_seq_{0};

  std::atomic<double> stall_seconds_{0.0};
  std::thread worker_;
};

}  // namespace quadvio
