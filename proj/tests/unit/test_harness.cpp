#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adapj/csv.hpp"
#include "adapj/harness.hpp"

using namespace adapj;

namespace {

ExperimentConfig short_cfg() {
  ExperimentConfig cfg;
  cfg.trajectory.duration = 60.0;
  cfg.trajectory.sine_duration = 30.0;
  cfg.trajectory.sine_period = 15.0;
  cfg.babble.samples = 400;
  cfg.rnn.epochs = 10;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Test-only oracle: inverts the discrete plant update analytically so the
/// commanded actuation lands exactly on the desired next state.
class ExactInverseController : public Controller {
 public:
  explicit ExactInverseController(const SoftBendingPlant& plant) : plant_(plant) {
    const FingerPlantConfig& c = plant.config();
    const double h = c.dt / c.substeps;
    const double beta = 1.0 / (1.0 + h * c.damping_eff() / c.inertia);
    Eigen::Matrix2d m;
    m << 1.0 - beta * h * h * c.stiffness_eff() / c.inertia, h * beta,
        -beta * h * c.stiffness_eff() / c.inertia, beta;
    Eigen::Vector2d n(beta * h * h / c.inertia, beta * h / c.inertia);
    Eigen::Matrix2d mk = Eigen::Matrix2d::Identity();
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int i = 0; i < c.substeps; ++i) {
      acc += mk * n;
      mk = m * mk;
    }
    m_pow_ = mk;
    input_gain_ = acc;
  }

  std::string name() const override { return "oracle"; }
  void reset(const StateVec&) override {}

  ActuationVec act(const StateVec& sd_next, const StateVec&) override {
    const FingerPlantConfig& c = plant_.config();
    ActuationVec a(c.axes);
    for (int ax = 0; ax < c.axes; ++ax) {
      const double theta_target = invert_tip(sd_next[ax], c.length);
      Eigen::Vector2d x(plant_.state().theta[ax], plant_.state().theta_dot[ax]);
      const double drift = (m_pow_ * x)(0);
      a[ax] = (theta_target - drift) / (input_gain_(0) * c.torque_gain);
    }
    bool sat = false;
    sat = c.bounds.clamp(a);
    last_saturated_ = sat;
    return a;
  }

  double observe(const StateVec&) override { return 0.0; }

 private:
  static double invert_tip(double tip_mm, double length_m) {
    double lo = -2.3, hi = 2.3;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (tip_x_mm(mid, length_m) < tip_mm ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  const SoftBendingPlant& plant_;
  Eigen::Matrix2d m_pow_;
  Eigen::Vector2d input_gain_;
};

}  // namespace

TEST_CASE("babbling is seeded, sized, and bounded") {
  FingerPlantConfig pc;
  SoftBendingPlant plant(pc);
  const BabblingDataset a = run_babbling(plant, 100, 7);
  CHECK(a.size() == 100);
  const BabblingDataset b = run_babbling(plant, 100, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.samples[i].state == b.samples[i].state);
    REQUIRE(a.samples[i].actuation == b.samples[i].actuation);
  }
  for (const Sample& s : a.samples) {
    CHECK(s.actuation[0] >= pc.bounds.lo);
    CHECK(s.actuation[0] <= pc.bounds.hi);
  }
  const BabblingDataset c = run_babbling(plant, 100, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.samples[i].actuation != c.samples[i].actuation) differs = true;
  CHECK(differs);
}

TEST_CASE("analytic-inverse oracle tracks a slow trajectory to machine precision") {
  FingerPlantConfig pc;
  SoftBendingPlant plant(pc);
  ExactInverseController oracle(plant);
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::SineThenSteps;
  spec.duration = 40.0;
  spec.sine_duration = 40.0;
  spec.sine_period = 20.0;
  spec.amplitude = 60.0;
  const Trajectory traj = gen_trajectory(spec, pc.workspace_halfspan_vec());
  const RunReport report = run_tracking_loop(oracle, plant, traj);
  REQUIRE_FALSE(report.aborted_reason.has_value());
  CHECK(report.mae_mm() < 1e-6);
}

TEST_CASE("empty trajectory is rejected") {
  FingerPlantConfig pc;
  SoftBendingPlant plant(pc);
  ExactInverseController oracle(plant);
  Trajectory empty;
  CHECK_THROWS_AS(run_tracking_loop(oracle, plant, empty), Error);
}

TEST_CASE("updates-off with wrong matrices tracks worse than updates-on") {
  FingerPlantConfig pc;
  AdapJConfig ac;
  AdapJMatrices wrong = AdapJMatrices::zero(1, 1);
  wrong.A0 << 0.002;  // order-of-magnitude miscalibration
  wrong.A1 << -0.001;
  wrong.B0 << 0.2;
  TrajectorySpec spec;
  spec.duration = 80.0;
  spec.sine_duration = 40.0;
  spec.sine_period = 20.0;
  const Trajectory traj = gen_trajectory(spec, pc.workspace_halfspan_vec());

  double mae_on = 0.0, mae_off = 0.0;
  for (bool updates : {true, false}) {
    SoftBendingPlant plant(pc);
    AdapJController c(wrong, ac);
    c.set_updates_enabled(updates);
    const RunReport r = run_tracking_loop(c, plant, traj);
    (updates ? mae_on : mae_off) = r.mae_mm();
  }
  CHECK(mae_on < mae_off);
}

TEST_CASE("run_tracking is deterministic at the byte level") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 33;
  const TrackingResult r1 = run_tracking(cfg);
  const TrackingResult r2 = run_tracking(cfg);
  write_timeseries_csv("ts_a.csv", r1.report);
  write_timeseries_csv("ts_b.csv", r2.report);
  CHECK(slurp("ts_a.csv") == slurp("ts_b.csv"));
  std::remove("ts_a.csv");
  std::remove("ts_b.csv");
}

TEST_CASE("aggregates are recomputable from the serialized series") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 3;
  const TrackingResult res = run_tracking(cfg);
  write_timeseries_csv("ts_c.csv", res.report);
  const RunReport back = read_timeseries_csv("ts_c.csv");
  REQUIRE(back.steps.size() == res.report.steps.size());
  CHECK(std::abs(back.mae_mm() - res.report.mae_mm()) < 1e-9);
  CHECK(std::abs(back.err_std_mm() - res.report.err_std_mm()) < 1e-9);
  std::remove("ts_c.csv");
}

TEST_CASE("adapj and mpc update norms respect their configured caps") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 5;
  const TrackingResult res = run_tracking(cfg);
  for (const StepRecord& r : res.report.steps)
    CHECK(r.update_norm <= cfg.adapj.delta_omega_max + 1e-12);

  ExperimentConfig mcfg = short_cfg();
  mcfg.seed = 5;
  mcfg.controller = ControllerKind::Mpc;
  const TrackingResult mres = run_tracking(mcfg);
  for (const StepRecord& r : mres.report.steps)
    CHECK(r.update_norm <= mcfg.mpc.delta_max + 1e-12);
}

TEST_CASE("sweep row counting and ratio-1 consistency") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 11;
  cfg.trajectory.duration = 40.0;
  cfg.trajectory.sine_duration = 20.0;
  cfg.babble.samples = 300;
  cfg.sweep.stiffness_ratios = {0.5, 1.0, 2.0};
  cfg.sweep.damping_ratios = {};
  cfg.sweep.controllers = {"adapj", "jacobian", "mpc", "rnn"};
  cfg.sweep.seeds = 1;
  cfg.rnn.epochs = 5;
  const SweepResult sweep = run_sweep(cfg);
  CHECK(sweep.rows.size() == 12);  // 3 ratios x 4 controllers x 1 seed
  CHECK(sweep.trends.size() == 3);

  // The ratio-1 AdapJ row reproduces a plain tracking run with the same seed
  // stream and trajectory.
  double sweep_mae = -1.0;
  for (const SweepRow& r : sweep.rows)
    if (r.ratio == 1.0 && r.controller == "adapj") sweep_mae = r.mae_mm;
  REQUIRE(sweep_mae >= 0.0);

  ExperimentConfig single = cfg;
  single.controller = ControllerKind::AdapJ;
  single.seed = mix_seed(cfg.seed, 0);
  single.trajectory.amplitude =
      cfg.sweep.amplitude_fraction * cfg.plant.workspace_halfspan_mm();
  const TrackingResult direct = run_tracking(single);
  CHECK(direct.report.mae_mm() == Catch::Approx(sweep_mae).margin(1e-12));
}

TEST_CASE("sweep results do not depend on the worker-thread count") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 13;
  cfg.trajectory.duration = 20.0;
  cfg.trajectory.sine_duration = 10.0;
  cfg.babble.samples = 200;
  cfg.sweep.stiffness_ratios = {0.5, 2.0};
  cfg.sweep.damping_ratios = {0.5};
  cfg.sweep.controllers = {"adapj", "jacobian"};
  cfg.sweep.seeds = 2;
  const SweepResult a = run_sweep(cfg, 1);
  const SweepResult b = run_sweep(cfg, 4);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mae_mm == b.rows[i].mae_mm);  // bit-identical
    CHECK(a.rows[i].controller == b.rows[i].controller);
    CHECK(a.rows[i].ratio == b.rows[i].ratio);
  }
  REQUIRE(a.trends.size() == b.trends.size());
  for (std::size_t i = 0; i < a.trends.size(); ++i)
    CHECK(a.trends[i].final_.A0 == b.trends[i].final_.A0);
}

TEST_CASE("a controller fault aborts the run with a partial report") {
  struct FaultyController : Controller {
    int steps = 0;
    std::string name() const override { return "faulty"; }
    void reset(const StateVec&) override { steps = 0; }
    ActuationVec act(const StateVec&, const StateVec& s) override {
      if (++steps > 10) fail(ErrorCategory::Numeric, "synthetic fault");
      return ActuationVec::Zero(s.size());
    }
    double observe(const StateVec&) override { return 0.0; }
  };
  FingerPlantConfig pc;
  SoftBendingPlant plant(pc);
  FaultyController c;
  TrajectorySpec spec;
  spec.duration = 10.0;
  const Trajectory traj = gen_trajectory(spec, pc.workspace_halfspan_vec());
  const RunReport rep = run_tracking_loop(c, plant, traj);
  REQUIRE(rep.aborted_reason.has_value());
  CHECK(rep.steps.size() == 10);
  CHECK(rep.aborted_reason->find("synthetic fault") != std::string::npos);
}

TEST_CASE("adapj warm start loads serialized matrices") {
  AdapJMatrices m = AdapJMatrices::zero(1, 1);
  m.A0 << 2.89;
  m.A1 << -1.86;
  m.B0 << -0.55;
  const std::string path = "warm_start_test.csv";
  write_matrix_blocks_csv(path, {{"A0", m.A0}, {"A1", m.A1}, {"B0", m.B0}});
  const AdapJMatrices back = load_adapj_matrices(path);
  CHECK(back.A0 == m.A0);
  CHECK(back.A1 == m.A1);
  CHECK(back.B0 == m.B0);

  ExperimentConfig cfg = short_cfg();
  cfg.adapj_warm_start = path;
  cfg.babble.samples = 50;  // warm start must not require an init-grade dataset
  const ControllerInit init = prepare_init(cfg, {ControllerKind::AdapJ}, 1);
  CHECK(init.adapj.A0 == m.A0);
  std::remove(path.c_str());
}

TEST_CASE("disturbance protocol shape and stationarity without disturbances") {
  ExperimentConfig cfg;
  cfg.plant.axes = 2;
  cfg.seed = 17;
  cfg.babble.samples = 400;
  cfg.trajectory.liss_round_duration = 30.0;
  cfg.disturb.enabled = false;
  const DisturbanceProtocolReport rep = run_disturbance_protocol(cfg);
  REQUIRE(rep.rounds.size() == 5);
  REQUIRE_FALSE(rep.report.aborted_reason.has_value());
  double lo = 1e30, hi = 0.0;
  for (const RoundStats& r : rep.rounds) {
    lo = std::min(lo, r.mae_mm);
    hi = std::max(hi, r.mae_mm);
    CHECK(r.disturbance == "none");
  }
  CHECK(hi / lo <= 2.0);
  CHECK(hi / lo >= 1.0);
}

TEST_CASE("bench produces one row per controller") {
  ExperimentConfig cfg = short_cfg();
  cfg.babble.samples = 200;
  cfg.rnn.epochs = 3;
  const auto rows =
      bench_step_time(cfg, {ControllerKind::AdapJ, ControllerKind::Jacobian, ControllerKind::Mpc},
                      1000);
  REQUIRE(rows.size() == 3);
  for (const BenchRow& r : rows) {
    CHECK(r.median_seconds >= 0.0);
    CHECK(r.p95_seconds >= r.median_seconds);
  }
  CHECK_THROWS_AS(bench_step_time(cfg, {ControllerKind::AdapJ}, 10), Error);
}

TEST_CASE("config file overlay") {
  const KeyValueConfig kv = KeyValueConfig::from_string(
      "# comment\n"
      "plant.axes = 2\n"
      "adapj.rho = 0.25\n"
      "trajectory.kind = lissajous\n"
      "trajectory.step_fractions = -1, 0.5, 0.25\n"
      "run.seed = 99\n"
      "run.update_enabled = false\n");
  ExperimentConfig cfg;
  apply_config(cfg, kv);
  CHECK(cfg.plant.axes == 2);
  CHECK(cfg.adapj.rho == 0.25);
  CHECK(cfg.trajectory.kind == TrajectoryKind::Lissajous);
  REQUIRE(cfg.trajectory.step_fractions.size() == 3);
  CHECK(cfg.trajectory.step_fractions[1] == 0.5);
  CHECK(cfg.seed == 99);
  CHECK_FALSE(cfg.update_enabled);
  CHECK_THROWS_AS(KeyValueConfig::from_string("plant.axes: 2\n"), Error);
  CHECK_THROWS_AS(
      [] {
        ExperimentConfig c;
        apply_config(c, KeyValueConfig::from_string("adapj.rho = fast\n"));
      }(),
      Error);
}
