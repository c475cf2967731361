#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "quadvio/io/log_io.hpp"
#include "quadvio/io/metrics.hpp"
#include "quadvio/pipeline/replay.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEstimator = 4;

bool verbose() {
  const char* v = std::getenv("QUADVIO_VERBOSE");
  return v != nullptr && std::string(v) != "0";
}

void info(const std::string& msg) {
  if (verbose()) {
    std::cerr << "[quadvio] " << msg << '\n';
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  auto config = quadvio::io::RunConfig::from_file(config_path);
  const auto trajectory = config.make_trajectory();
  const double duration = config.effective_duration();
  info("simulating " + std::to_string(duration) + " s, seed " +
       std::to_string(config.sim.seed));
  const auto log = quadvio::sim::run_simulation(config.sim, trajectory, duration);
  quadvio::io::write_sim_log(out_dir, log, config);
  info("wrote " + out_dir + " (" + std::to_string(log.imu.size()) +
       " IMU rows, " + std::to_string(log.frames.size()) + " frames)");
  return 0;
}

int cmd_estimate(const std::string& log_dir, const std::string& config_path,
                 bool no_vision, bool no_keyframes, bool no_fej,
                 const std::string& out_dir) {
  auto config = quadvio::io::RunConfig::from_file(config_path);
  auto loaded = quadvio::io::read_sim_log(log_dir);
  if (loaded.log.truth.empty() || loaded.log.imu.empty()) {
    throw quadvio::DataError("log directory has no data: " + log_dir);
  }
  if (no_vision) {
    config.modes.vision = false;
  }
  if (no_keyframes) {
    config.modes.keyframes = false;
  }
  if (no_fej) {
    config.ekf.use_fej = false;
  }

  quadvio::EstimatorCore core(
      config.ekf, config.noise, config.keyframe, config.sim.intrinsics,
      config.modes, quadvio::initial_state_from_truth(loaded.log.truth.front()),
      config.init_cov.matrix());

  const auto t0 = std::chrono::steady_clock::now();
  auto result = quadvio::replay_log(loaded.log, std::move(core));
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();

  std::filesystem::create_directories(out_dir);
  quadvio::io::write_estimates_csv(out_dir + "/estimates.csv", result.trace);

  nlohmann::json diag;
  diag["imu_steps"] = result.diagnostics.imu_steps;
  diag["frames_processed"] = result.diagnostics.frames_processed;
  diag["keyframes_created"] = result.diagnostics.keyframes_created;
  diag["pairs_processed"] = result.diagnostics.pairs_processed;
  diag["vision_accepted"] = result.counters.vision_accepted;
  diag["vision_rejected"] = result.counters.vision_rejected;
  diag["accel_rejected"] = result.counters.accel_rejected;
  diag["degenerate_pairs"] = result.counters.degenerate_pairs;
  diag["wall_time_s"] = wall;
  diag["imu_step_mean_us"] =
      result.diagnostics.imu_steps > 0
          ? 1e6 * wall / static_cast<double>(result.diagnostics.imu_steps)
          : 0.0;
  std::ofstream df(out_dir + "/diagnostics.json");
  df << diag.dump(2) << '\n';

  info("estimated " + std::to_string(result.trace.size()) + " steps in " +
       std::to_string(wall) + " s");
  return 0;
}

int cmd_evaluate(const std::string& est_path, const std::string& gt_path,
                 const std::string& config_path, const std::string& out_dir) {
  const auto estimates = quadvio::io::read_estimates_csv(est_path);
  const auto truth = quadvio::io::read_groundtruth_csv(gt_path);

  std::optional<quadvio::Vec3> true_ba, true_bg;
  if (!config_path.empty()) {
    const auto config = quadvio::io::RunConfig::from_file(config_path);
    true_ba = config.true_accel_bias;
    true_bg = config.true_gyro_bias;
  }

  quadvio::io::ErrorSeries series;
  const auto report =
      quadvio::io::evaluate_metrics(estimates, truth, true_ba, true_bg, &series);
  quadvio::io::write_metrics(out_dir, report, series);
  std::cout << quadvio::io::format_metrics_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-aided monocular visual-inertial odometry: simulator, "
               "estimator and evaluation tools"};
  app.require_subcommand(1);

  std::string config_path, out_dir, log_dir, est_path, gt_path;
  bool no_vision = false, no_keyframes = false, no_fej = false;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic flight log");
  sim->add_option("--config", config_path, "run configuration file")->required();
  sim->add_option("--out", out_dir, "output directory")->required();

  auto* est = app.add_subcommand("estimate", "run the estimator over a log");
  est->add_option("--log", log_dir, "log directory from simulate")->required();
  est->add_option("--config", config_path, "run configuration file")->required();
  est->add_flag("--no-vision", no_vision, "disable visual updates");
  est->add_flag("--no-keyframes", no_keyframes,
                "augment on every frame instead of key-frames");
  est->add_flag("--no-fej", no_fej, "disable first-estimates Jacobians");
  est->add_option("--out", out_dir, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "score estimates against truth");
  eval->add_option("--est", est_path, "estimates.csv")->required();
  eval->add_option("--gt", gt_path, "groundtruth.csv")->required();
  eval->add_option("--config", config_path,
                   "resolved config (enables bias metrics)");
  eval->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, out_dir);
    }
    if (est->parsed()) {
      return cmd_estimate(log_dir, config_path, no_vision, no_keyframes,
                          no_fej, out_dir);
    }
    if (eval->parsed()) {
      return cmd_evaluate(est_path, gt_path, config_path, out_dir);
    }
  } catch (const quadvio::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const quadvio::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const quadvio::EstimatorFault& e) {
    std::cerr << "estimator fault: " << e.what() << '\n';
    return kExitEstimator;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
