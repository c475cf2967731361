#include <doctest.h>

#include <chrono>
#include <deque>

#include "quadvio/io/run_config.hpp"
#include "quadvio/pipeline/fusion_pipeline.hpp"
#include "quadvio/pipeline/replay.hpp"

using namespace quadvio;

namespace {

struct Setup {
  io::RunConfig cfg;
  sim::SimLog log;
};

Setup make_setup(double duration, std::uint64_t seed = 42,
                 const std::string& traj = "standard") {
  Setup s;
  s.cfg.trajectory = traj;
  s.cfg.sim.seed = seed;
  s.cfg.finalize();
  const auto trajectory = s.cfg.make_trajectory();
  s.log = sim::run_simulation(s.cfg.sim, trajectory, duration);
  return s;
}

EstimatorCore make_core(const Setup& s) {
  return EstimatorCore(s.cfg.ekf, s.cfg.noise, s.cfg.keyframe,
                       s.cfg.sim.intrinsics, s.cfg.modes,
                       initial_state_from_truth(s.log.truth.front()),
                       s.cfg.init_cov.matrix());
}

double max_state_diff(const Estimate& a, const Estimate& b) {
  double d = (a.state.vector().head(kNominalDim) -
              b.state.vector().head(kNominalDim))
                 .cwiseAbs()
                 .maxCoeff();
  d = std::max(d, (a.marginal_std - b.marginal_std).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("replay of an empty log is an empty trace") {
  Setup s = make_setup(1.0);
  sim::SimLog empty;
  empty.config = s.cfg.sim;
  const auto result = replay_log(empty, make_core(s));
  CHECK(result.trace.empty());
}

TEST_CASE("replay is deterministic") {
  Setup s = make_setup(5.0);
  const auto a = replay_log(s.log, make_core(s));
  const auto b = replay_log(s.log, make_core(s));
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(max_state_diff(a.trace[i], b.trace[i]) == 0.0);
  }
}

TEST_CASE("trace has one row per IMU sample and time never goes backward") {
  Setup s = make_setup(4.0);
  const auto result = replay_log(s.log, make_core(s));
  CHECK(result.trace.size() == s.log.imu.size());
  for (std::size_t i = 1; i < result.trace.size(); ++i) {
    CHECK(result.trace[i].t >= result.trace[i - 1].t);
  }
}

TEST_CASE("out-of-order IMU samples are dropped, not fused") {
  Setup s = make_setup(1.0);
  EstimatorCore core = make_core(s);
  core.process_imu(s.log.imu[10]);
  const VecX before = core.state().vector();
  core.process_imu(s.log.imu[3]);  // stale
  CHECK((core.state().vector() - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(core.diagnostics().imu_dropped == 1);
}

TEST_CASE("single sample leaves one snapshot in the queue") {
  Setup s = make_setup(1.0);
  FusionPipeline pipeline(make_core(s), s.cfg.pipeline);
  pipeline.ingest_imu(s.log.imu[0]);
  CHECK(pipeline.snapshot_count() == 1);
}

TEST_CASE("zero-pair frame leaves the nominal state on the pure-IMU path") {
  Setup s = make_setup(1.0);
  EstimatorCore with_frame = make_core(s);
  EstimatorCore imu_only = make_core(s);
  for (int k = 0; k < 20; ++k) {
    with_frame.process_imu(s.log.imu[k]);
    imu_only.process_imu(s.log.imu[k]);
  }
  FeatureObservation empty_frame;
  empty_frame.t = with_frame.time();
  with_frame.process_frame(empty_frame);  // creates a key-frame, no updates
  CHECK((with_frame.state().vector().head(kNominalDim) -
         imu_only.state().vector())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((with_frame.covariance().topLeftCorner(kNominalDim, kNominalDim) -
         imu_only.covariance())
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("threaded pipeline reproduces the deterministic replay") {
  Setup s = make_setup(6.0);
  const auto reference = replay_log(s.log, make_core(s));

  FusionPipeline pipeline(make_core(s), s.cfg.pipeline);
  std::vector<Estimate> live;
  live.reserve(s.log.imu.size());
  std::size_t fi = 0;
  for (const auto& sample : s.log.imu) {
    live.push_back(pipeline.ingest_imu(sample));
    while (fi < s.log.frames.size() && s.log.frames[fi].t <= sample.t + 1e-12) {
      pipeline.ingest_frame(s.log.frames[fi]);
      pipeline.wait_idle();  // zero-latency pacing
      ++fi;
    }
  }
  pipeline.wait_idle();

  REQUIRE(live.size() == reference.trace.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    CHECK(max_state_diff(live[i], reference.trace[i]) < 1e-9);
  }
  const auto final_live = pipeline.current_estimate();
  CHECK(max_state_diff(final_live, reference.trace.back()) < 1e-9);
  CHECK(pipeline.frames_dropped() == 0);
}

TEST_CASE("delayed vision converges to the zero-latency answer exactly") {
  Setup s = make_setup(6.0);

  // zero latency reference
  FusionPipeline ref(make_core(s), s.cfg.pipeline);
  std::size_t fi = 0;
  for (const auto& sample : s.log.imu) {
    ref.ingest_imu(sample);
    while (fi < s.log.frames.size() && s.log.frames[fi].t <= sample.t + 1e-12) {
      ref.ingest_frame(s.log.frames[fi]);
      ref.wait_idle();
      ++fi;
    }
  }
  ref.wait_idle();

  // 15 IMU periods of vision latency
  FusionPipeline delayed(make_core(s), s.cfg.pipeline);
  std::deque<FeatureObservation> pending;
  fi = 0;
  const int latency = 15;
  std::size_t k = 0;
  for (const auto& sample : s.log.imu) {
    delayed.ingest_imu(sample);
    while (fi < s.log.frames.size() && s.log.frames[fi].t <= sample.t + 1e-12) {
      pending.push_back(s.log.frames[fi]);
      ++fi;
    }
    while (!pending.empty() &&
           pending.front().t + latency * 0.005 <= sample.t + 1e-12) {
      delayed.ingest_frame(pending.front());
      delayed.wait_idle();
      pending.pop_front();
    }
    ++k;
  }
  while (!pending.empty()) {
    delayed.ingest_frame(pending.front());
    pending.pop_front();
  }
  delayed.wait_idle();

  CHECK(max_state_diff(ref.current_estimate(), delayed.current_estimate()) <
        1e-9);
  CHECK(delayed.frames_dropped() == 0);
}

TEST_CASE("frames older than the snapshot horizon are dropped") {
  Setup s = make_setup(2.0);
  PipelineConfig pc = s.cfg.pipeline;
  pc.snapshot_horizon = 0.2;
  FusionPipeline pipeline(make_core(s), pc);
  for (const auto& sample : s.log.imu) {
    pipeline.ingest_imu(sample);
  }
  FeatureObservation stale = s.log.frames[1];  // t = 0.1, horizon start 1.8
  pipeline.ingest_frame(stale);
  pipeline.wait_idle();
  CHECK(pipeline.frames_dropped() == 1);
}

TEST_CASE("a vision stall does not hold up the IMU path") {
  Setup s = make_setup(3.0);
  FusionPipeline pipeline(make_core(s), s.cfg.pipeline);
  pipeline.set_vision_stall(0.05);

  double worst_call = 0.0;
  std::size_t fi = 0;
  for (const auto& sample : s.log.imu) {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline.ingest_imu(sample);
    const double dt_call = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    worst_call = std::max(worst_call, dt_call);
    while (fi < s.log.frames.size() && s.log.frames[fi].t <= sample.t + 1e-12) {
      pipeline.ingest_frame(s.log.frames[fi]);
      ++fi;
    }
  }
  pipeline.wait_idle();
  // each vision pass sleeps 50 ms; the IMU path must never see that
  CHECK(worst_call < 0.025);
}
