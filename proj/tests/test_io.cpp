#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "quadvio/io/log_io.hpp"
#include "quadvio/io/metrics.hpp"
#include "quadvio/pipeline/replay.hpp"

using namespace quadvio;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("quadvio_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config defaults parse and unknown keys are rejected") {
  const auto cfg = io::RunConfig::from_string("");
  CHECK(cfg.sim.imu_rate == 200.0);
  CHECK(cfg.sim.camera_rate == 10.0);
  CHECK(cfg.sim.accel_noise_var == 0.25);
  CHECK(cfg.sim.gyro_noise_var == 0.005);
  CHECK(cfg.sim.feature_count == 2000);
  CHECK(cfg.sim.min_tracked_features == 30);
  CHECK(cfg.keyframe.disparity_threshold_px == 40.0);
  CHECK(cfg.ekf.use_fej);

  CHECK_THROWS_WITH_AS(io::RunConfig::from_string("nosuchkey = 3\n"),
                       doctest::Contains("nosuchkey"), ConfigError);
  CHECK_THROWS_WITH_AS(io::RunConfig::from_string("imu_rate = fast\n"),
                       doctest::Contains("imu_rate"), ConfigError);
  CHECK_THROWS_AS(io::RunConfig::from_string("imu_rate\n"), ConfigError);
  // rate coupling enforced
  CHECK_THROWS_AS(io::RunConfig::from_string("imu_rate = 195\n"), ConfigError);
}

TEST_CASE("config accepts comments, spacing and round-trips") {
  const std::string text =
      "# a comment\n"
      "  seed = 7   # trailing comment\n"
      "pixel_sigma = 0.5\n"
      "camera_rate = 20\n"
      "vision_gate_raw = true\n"
      "\n";
  const auto cfg = io::RunConfig::from_string(text);
  CHECK(cfg.sim.seed == 7);
  CHECK(cfg.sim.pixel_sigma == 0.5);
  CHECK(cfg.sim.camera_rate == 20.0);
  CHECK(cfg.ekf.vision_gate_raw);
  CHECK(cfg.noise.pixel_sigma == 0.5);  // mirrored into the estimator

  const auto round = io::RunConfig::from_string(cfg.to_string());
  CHECK(round.sim.seed == cfg.sim.seed);
  CHECK(round.sim.pixel_sigma == cfg.sim.pixel_sigma);
  CHECK(round.ekf.vision_gate_raw == cfg.ekf.vision_gate_raw);
  CHECK(round.sim.camera_rate == cfg.sim.camera_rate);
}

TEST_CASE("log files round-trip exactly") {
  const auto dir = temp_dir("roundtrip");
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);

  std::vector<ImuSample> imu;
  std::vector<sim::TruthSample> truth;
  std::vector<FeatureObservation> frames;
  for (int i = 0; i < 50; ++i) {
    ImuSample s;
    s.t = 0.005 * i + 1e-7 * u(rng);
    s.accel = Vec3(u(rng), u(rng), u(rng));
    s.gyro = Vec3(u(rng), u(rng), u(rng));
    imu.push_back(s);

    sim::TruthSample g;
    g.t = s.t;
    g.position = Vec3(u(rng), u(rng), u(rng));
    g.attitude = EulerAngles{0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)};
    g.velocity_body = Vec3(u(rng), u(rng), u(rng));
    truth.push_back(g);

    FeatureObservation f;
    f.t = s.t;
    for (int j = 0; j < 5; ++j) {
      f.points.push_back({i * 10 + j, 320.0 + u(rng), 240.0 + u(rng)});
    }
    frames.push_back(f);
  }

  io::write_imu_csv((dir / "imu.csv").string(), imu);
  const auto imu2 = io::read_imu_csv((dir / "imu.csv").string());
  REQUIRE(imu2.size() == imu.size());
  for (std::size_t i = 0; i < imu.size(); ++i) {
    CHECK(imu2[i].t == imu[i].t);
    CHECK((imu2[i].accel - imu[i].accel).cwiseAbs().maxCoeff() == 0.0);
    CHECK((imu2[i].gyro - imu[i].gyro).cwiseAbs().maxCoeff() == 0.0);
  }

  io::write_groundtruth_csv((dir / "gt.csv").string(), truth);
  const auto truth2 = io::read_groundtruth_csv((dir / "gt.csv").string());
  REQUIRE(truth2.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(truth2[i].t == truth[i].t);
    CHECK((truth2[i].position - truth[i].position).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(truth2[i].attitude.roll == truth[i].attitude.roll);
    CHECK((truth2[i].velocity_body - truth[i].velocity_body)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  io::write_features_jsonl((dir / "f.jsonl").string(), frames);
  const auto frames2 = io::read_features_jsonl((dir / "f.jsonl").string());
  REQUIRE(frames2.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames2[i].t == frames[i].t);
    REQUIRE(frames2[i].points.size() == frames[i].points.size());
    for (std::size_t j = 0; j < frames[i].points.size(); ++j) {
      CHECK(frames2[i].points[j].id == frames[i].points[j].id);
      CHECK(frames2[i].points[j].u == frames[i].points[j].u);
      CHECK(frames2[i].points[j].v == frames[i].points[j].v);
    }
  }
}

TEST_CASE("corrupt rows are reported with their line number") {
  const auto dir = temp_dir("corrupt");
  {
    std::ofstream f(dir / "imu.csv");
    f << "t_s,ax,ay,az,gx,gy,gz\n";
    f << "0,0,0,-9.81,0,0,0\n";
    f << "0.005,0,bad,-9.81,0,0,0\n";
  }
  CHECK_THROWS_WITH_AS(io::read_imu_csv((dir / "imu.csv").string()),
                       doctest::Contains(":3"), DataError);

  {
    std::ofstream f(dir / "features.jsonl");
    f << R"({"t": 0.0, "obs": []})" << "\n";
    f << "not json\n";
  }
  CHECK_THROWS_WITH_AS(io::read_features_jsonl((dir / "features.jsonl").string()),
                       doctest::Contains(":2"), DataError);

  CHECK_THROWS_AS(io::read_imu_csv((dir / "missing.csv").string()), DataError);
}

TEST_CASE("sim log directory round-trips including bias truth") {
  const auto dir = temp_dir("simlog");
  io::RunConfig cfg;
  cfg.trajectory = "hover";
  cfg.duration = 2.0;
  cfg.sim.seed = 11;
  cfg.finalize();
  const auto log = sim::run_simulation(cfg.sim, cfg.make_trajectory(), 2.0);
  io::write_sim_log(dir.string(), log, cfg);

  CHECK(fs::exists(dir / "imu.csv"));
  CHECK(fs::exists(dir / "features.jsonl"));
  CHECK(fs::exists(dir / "groundtruth.csv"));
  CHECK(fs::exists(dir / "resolved_config.cfg"));

  const auto loaded = io::read_sim_log(dir.string());
  CHECK(loaded.log.imu.size() == log.imu.size());
  CHECK(loaded.log.frames.size() == log.frames.size());
  CHECK((loaded.log.true_accel_bias - log.true_accel_bias)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((loaded.log.true_gyro_bias - log.true_gyro_bias)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("metrics: perfect estimates score zero error, full coverage") {
  std::vector<sim::TruthSample> truth;
  std::vector<io::EstimateRow> rows;
  for (int i = 0; i < 100; ++i) {
    sim::TruthSample g;
    g.t = 0.01 * i;
    g.position = Vec3(i * 0.1, -1.0, 2.0);
    g.attitude = EulerAngles{0.01, -0.02, 0.3};
    g.velocity_body = Vec3(1.0, 0.0, 0.0);
    truth.push_back(g);

    io::EstimateRow r;
    r.t = g.t;
    r.position = g.position;
    r.attitude = g.attitude.vec();
    r.velocity_body = g.velocity_body;
    r.marginal_std = VecX::Zero(kNominalDim);
    rows.push_back(r);
  }
  const auto report = io::evaluate_metrics(rows, truth, std::nullopt,
                                           std::nullopt, nullptr);
  for (int i = 0; i < 3; ++i) {
    CHECK(report.velocity[i].rmse == 0.0);
    CHECK(report.velocity[i].coverage_2sigma == 1.0);
    CHECK(report.position[i].rmse == 0.0);
  }
  CHECK_FALSE(report.accel_bias.has_value());

  // constant 1 m/s offset on vx
  for (auto& r : rows) {
    r.velocity_body.x() += 1.0;
  }
  const auto biased = io::evaluate_metrics(rows, truth, std::nullopt,
                                           std::nullopt, nullptr);
  CHECK(biased.velocity[0].rmse == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(biased.velocity[0].coverage_2sigma == 0.0);

  // misaligned rows must be rejected
  rows[3].t += 0.004;
  CHECK_THROWS_AS(io::evaluate_metrics(rows, truth, std::nullopt, std::nullopt,
                                       nullptr),
                  DataError);
}

TEST_CASE("cli workflow: simulate, estimate, evaluate") {
  const auto dir = temp_dir("cli");
  const std::string cli = QUADVIO_CLI_PATH;
  {
    std::ofstream f(dir / "run.cfg");
    f << "trajectory = hover\n";
    f << "duration = 3\n";
    f << "seed = 9\n";
  }
  const std::string simdir = (dir / "sim").string();
  const std::string estdir = (dir / "est").string();
  const std::string evaldir = (dir / "eval").string();

  std::string cmd = cli + " simulate --config " + (dir / "run.cfg").string() +
                    " --out " + simdir;
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(fs::path(simdir) / "imu.csv"));

  cmd = cli + " estimate --log " + simdir + " --config " + simdir +
        "/resolved_config.cfg --out " + estdir;
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(fs::path(estdir) / "estimates.csv"));
  CHECK(fs::exists(fs::path(estdir) / "diagnostics.json"));

  // trace row count matches the IMU stream
  const auto est = io::read_estimates_csv(estdir + "/estimates.csv");
  const auto imu = io::read_imu_csv(simdir + "/imu.csv");
  CHECK(est.size() == imu.size());

  cmd = cli + " evaluate --est " + estdir + "/estimates.csv --gt " + simdir +
        "/groundtruth.csv --config " + simdir + "/resolved_config.cfg --out " +
        evaldir + " > " + (dir / "table.txt").string();
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(fs::path(evaldir) / "metrics.json"));
  CHECK(fs::exists(fs::path(evaldir) / "errors.csv"));
  CHECK(fs::exists(fs::path(evaldir) / "nees.csv"));

  // config errors exit with code 2
  {
    std::ofstream f(dir / "bad.cfg");
    f << "no_such_key = 1\n";
  }
  cmd = cli + " simulate --config " + (dir / "bad.cfg").string() + " --out " +
        (dir / "x").string() + " 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);

  // missing log directory exits with code 3
  cmd = cli + " estimate --log " + (dir / "nolog").string() + " --config " +
        simdir + "/resolved_config.cfg --out " + (dir / "y").string() +
        " 2> /dev/null";
  const int rc2 = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc2) == 3);
}

TEST_CASE("simulate twice with the same seed produces identical files") {
  const auto dir = temp_dir("determinism");
  io::RunConfig cfg;
  cfg.trajectory = "hover";
  cfg.duration = 2.0;
  cfg.sim.seed = 31;
  cfg.finalize();
  const auto log1 = sim::run_simulation(cfg.sim, cfg.make_trajectory(), 2.0);
  const auto log2 = sim::run_simulation(cfg.sim, cfg.make_trajectory(), 2.0);
  io::write_sim_log((dir / "a").string(), log1, cfg);
  io::write_sim_log((dir / "b").string(), log2, cfg);
  for (const char* name : {"imu.csv", "features.jsonl", "groundtruth.csv",
                           "resolved_config.cfg"}) {
    std::ifstream fa(dir / "a" / name), fb(dir / "b" / name);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}
