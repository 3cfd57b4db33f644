#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "adapj/config.hpp"
#include "adapj/report.hpp"

namespace adapj {

/// Random excitation for initialization datasets. The default bounded random
/// walk keeps consecutive actuations correlated, which excites the lagged
/// plant across its range and yields full-rank regressors; white noise is
/// available for comparison.
inline BabblingDataset run_babbling(SoftBendingPlant& plant, int n, std::uint64_t seed,
                                    const BabbleConfig& bc = BabbleConfig{}) {
  if (n < 3) fail(ErrorCategory::Config, "run_babbling: need at least 3 samples");
  plant.reset();
  const ActuationBounds& bounds = plant.config().bounds;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double step = bc.walk_step * bounds.span();

  BabblingDataset data;
  data.dt = plant.config().dt;
  data.meta.plant = plant.config().axes == 1 ? "finger-1dof" : "planar-2dof";
  data.meta.seed = seed;
  ActuationVec a = ActuationVec::Zero(plant.act_dim());
  for (int t = 0; t < n; ++t) {
    for (Eigen::Index c = 0; c < a.size(); ++c) {
      if (bc.white_noise)
        a[c] = bounds.lo + u01(rng) * bounds.span();
      else
        a[c] = std::clamp(a[c] + step * unit(rng), bounds.lo, bounds.hi);
    }
    data.samples.push_back({t, plant.tip(), a});
    plant.step(a);
  }
  plant.reset();
  return data;
}

namespace detail {
inline std::uint64_t babble_seed(std::uint64_t experiment_seed) {
  return mix_seed(experiment_seed, 0xb0b);
}
inline std::uint64_t disturbance_seed(std::uint64_t experiment_seed) {
  return mix_seed(experiment_seed, 0xd15);
}
}  // namespace detail

/// Warm start from a serialized matrices CSV (blocks A0, A1, B0).
inline AdapJMatrices load_adapj_matrices(const std::string& path) {
  AdapJMatrices m;
  bool a0 = false, a1 = false, b0 = false;
  for (auto& [name, mat] : read_matrix_blocks_csv(path)) {
    if (name == "A0") { m.A0 = std::move(mat); a0 = true; }
    else if (name == "A1") { m.A1 = std::move(mat); a1 = true; }
    else if (name == "B0") { m.B0 = std::move(mat); b0 = true; }
  }
  if (!a0 || !a1 || !b0)
    fail(ErrorCategory::Data, "matrices file '" + path + "' must contain A0, A1, B0 blocks");
  m.validate();
  return m;
}

/// Initialization products for one babbling stream; reusable across trials so
/// sweeps retrain each controller once per seed.
struct ControllerInit {
  BabblingDataset data;
  AdapJMatrices adapj;
  JacobianState jacobian;
  bool jacobian_settled = true;
  MpcState mpc;
  RnnWeights rnn_full;
  TrainingReport rnn_full_report;
  RnnWeights rnn_small;
  TrainingReport rnn_small_report;
  bool has_adapj = false, has_jacobian = false, has_mpc = false, has_rnn_full = false,
       has_rnn_small = false;
};

inline RnnConfig resolve_rnn_config(const ExperimentConfig& cfg) {
  RnnConfig rc = cfg.rnn;
  rc.bounds = cfg.plant.bounds;
  if (rc.state_scale.size() != cfg.plant.axes)
    rc.state_scale = ScaleMap::symmetric(cfg.plant.axes, cfg.plant.workspace_halfspan_mm());
  if (rc.act_scale.size() != cfg.plant.axes)
    rc.act_scale = ScaleMap::from_bounds(cfg.plant.axes, cfg.plant.bounds);
  return rc;
}

inline AdapJConfig resolve_adapj_config(const ExperimentConfig& cfg) {
  AdapJConfig ac = cfg.adapj;
  ac.bounds = cfg.plant.bounds;
  return ac;
}

inline MpcConfig resolve_mpc_config(const ExperimentConfig& cfg) {
  MpcConfig mc = cfg.mpc;
  mc.bounds = cfg.plant.bounds;
  return mc;
}

/// Prepares the initialization products needed by `kinds` from one babbling
/// stream collected on (and a Jacobian probe of) the plant in `cfg`.
inline ControllerInit prepare_init(const ExperimentConfig& cfg,
                                   const std::vector<ControllerKind>& kinds,
                                   std::uint64_t experiment_seed) {
  ControllerInit init;
  SoftBendingPlant plant(cfg.plant);
  init.data = run_babbling(plant, cfg.babble.samples, detail::babble_seed(experiment_seed),
                           cfg.babble);
  const RnnConfig rnn_cfg = resolve_rnn_config(cfg);
  for (ControllerKind k : kinds) {
    switch (k) {
      case ControllerKind::AdapJ: {
        if (init.has_adapj) break;
        if (!cfg.adapj_warm_start.empty()) {
          init.adapj = load_adapj_matrices(cfg.adapj_warm_start);
        } else {
          AdapJConfig ac = resolve_adapj_config(cfg);
          ac.init_seed = mix_seed(experiment_seed, 0xad);
          init.adapj = adapj_init(init.data.head(cfg.babble.adapj_samples), ac);
        }
        init.has_adapj = true;
        break;
      }
      case ControllerKind::Jacobian: {
        if (init.has_jacobian) break;
        SoftBendingPlant probe(cfg.plant);
        JacobianInitResult r =
            jacobian_init(probe, cfg.jacobian.increment, cfg.jacobian.settle_steps);
        init.jacobian = std::move(r.state);
        init.jacobian.alpha1 = cfg.jacobian.alpha1;
        init.jacobian.alpha2 = cfg.jacobian.alpha2;
        init.jacobian.beta1 = cfg.jacobian.beta1;
        init.jacobian.beta2 = cfg.jacobian.beta2;
        init.jacobian.smoothing = cfg.jacobian.smoothing;
        init.jacobian_settled = r.settled;
        init.has_jacobian = true;
        break;
      }
      case ControllerKind::Mpc: {
        if (init.has_mpc) break;
        init.mpc = mpc_fit(init.data, resolve_mpc_config(cfg));
        init.has_mpc = true;
        break;
      }
      case ControllerKind::Rnn:
      case ControllerKind::Ifc: {
        if (init.has_rnn_full) break;
        RnnConfig rc = rnn_cfg;
        rc.seed = mix_seed(experiment_seed, 0x52);
        auto [w, rep] = rnn_train(build_windows(init.data, rc.n, rc.state_scale, rc.act_scale), rc);
        init.rnn_full = std::move(w);
        init.rnn_full_report = std::move(rep);
        init.has_rnn_full = true;
        break;
      }
      case ControllerKind::Rnn100: {
        if (init.has_rnn_small) break;
        RnnConfig rc = rnn_cfg;
        rc.seed = mix_seed(experiment_seed, 0x52);
        auto [w, rep] = rnn_train(
            build_windows(init.data.head(cfg.babble.adapj_samples), rc.n, rc.state_scale,
                          rc.act_scale),
            rc);
        init.rnn_small = std::move(w);
        init.rnn_small_report = std::move(rep);
        init.has_rnn_small = true;
        break;
      }
    }
  }
  return init;
}

/// Builds a fresh controller instance from prepared initialization products.
inline std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                                   const ExperimentConfig& cfg,
                                                   const ControllerInit& init) {
  const RnnConfig rnn_cfg = resolve_rnn_config(cfg);
  switch (kind) {
    case ControllerKind::AdapJ:
      if (!init.has_adapj) fail(ErrorCategory::Config, "adapj not initialized");
      return std::make_unique<AdapJController>(init.adapj, resolve_adapj_config(cfg));
    case ControllerKind::Jacobian: {
      if (!init.has_jacobian) fail(ErrorCategory::Config, "jacobian not initialized");
      const JacobianActVariant variant = cfg.jacobian.variant == "optimal"
                                             ? JacobianActVariant::Optimal
                                             : JacobianActVariant::Inverse;
      return std::make_unique<JacobianController>(init.jacobian, variant, cfg.plant.bounds);
    }
    case ControllerKind::Mpc:
      if (!init.has_mpc) fail(ErrorCategory::Config, "mpc not initialized");
      return std::make_unique<MpcController>(init.mpc);
    case ControllerKind::Rnn:
      if (!init.has_rnn_full) fail(ErrorCategory::Config, "rnn not initialized");
      return std::make_unique<RnnController>(init.rnn_full, rnn_cfg, "rnn");
    case ControllerKind::Rnn100:
      if (!init.has_rnn_small) fail(ErrorCategory::Config, "rnn100 not initialized");
      return std::make_unique<RnnController>(init.rnn_small, rnn_cfg, "rnn100");
    case ControllerKind::Ifc:
      if (!init.has_rnn_full) fail(ErrorCategory::Config, "ifc inner rnn not initialized");
      return std::make_unique<IfcController>(
          init.rnn_full, rnn_cfg,
          IfcConfig::diagonal(cfg.plant.axes, cfg.plant.axes, cfg.ifc_gain));
  }
  fail(ErrorCategory::Config, "unknown controller kind");
}

/// The control loop: read s_t, fetch sd_{t+1}, act, step the plant, then let
/// the controller digest s_{t+1}. Wall time covers act + update only. A
/// controller or integration fault aborts the run, keeping the partial
/// report.
inline RunReport run_tracking_loop(Controller& controller, SoftBendingPlant& plant,
                                   const Trajectory& traj,
                                   const DisturbanceSpec& disturbance = DisturbanceSpec{}) {
  if (traj.desired.empty()) fail(ErrorCategory::Data, "run_tracking_loop: empty trajectory");
  disturbance.validate();
  using clock = std::chrono::steady_clock;
  plant.reset();
  controller.reset(plant.tip());
  std::mt19937_64 dist_rng(disturbance.seed);

  RunReport report;
  report.dt = plant.config().dt;
  report.controller = controller.name();
  const std::size_t total = traj.desired.size();
  report.steps.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    StepRecord rec;
    rec.t = static_cast<long>(t);
    rec.sd = traj.desired[t];
    rec.s = plant.tip();
    try {
      const StateVec& sd_next = traj.desired[std::min(t + 1, total - 1)];
      const auto t0 = clock::now();
      rec.a = controller.act(sd_next, rec.s);
      const auto t1 = clock::now();
      rec.saturated = controller.last_saturated();
      Eigen::VectorXd tau;
      if (!disturbance.empty())
        tau = inject_disturbance(disturbance, t, plant.state().theta, dist_rng);
      plant.step(rec.a, tau);
      const auto t2 = clock::now();
      rec.update_norm = controller.observe(plant.tip());
      const auto t3 = clock::now();
      rec.compute_seconds =
          std::chrono::duration<double>(t1 - t0).count() +
          std::chrono::duration<double>(t3 - t2).count();
    } catch (const Error& e) {
      report.aborted_reason = e.what();
      break;
    }
    report.steps.push_back(std::move(rec));
  }
  return report;
}

struct TrackingResult {
  RunReport report;
  BabblingDataset data;
  AdapJMatrices adapj_initial;
  AdapJMatrices adapj_final;
  bool has_adapj = false;
};

/// One full experiment: babble, initialize, generate the reference, run.
inline TrackingResult run_tracking(const ExperimentConfig& cfg) {
  cfg.plant.validate();
  TrajectorySpec spec = cfg.trajectory;
  spec.dt = cfg.plant.dt;
  const Trajectory traj = gen_trajectory(spec, cfg.plant.workspace_halfspan_vec());

  ControllerInit init = prepare_init(cfg, {cfg.controller}, cfg.seed);
  std::unique_ptr<Controller> controller = make_controller(cfg.controller, cfg, init);
  controller->set_updates_enabled(cfg.update_enabled);

  SoftBendingPlant plant(cfg.plant);
  TrackingResult result;
  result.report = run_tracking_loop(*controller, plant, traj);
  result.data = std::move(init.data);
  if (cfg.controller == ControllerKind::AdapJ) {
    result.adapj_initial = init.adapj;
    result.adapj_final = static_cast<AdapJController*>(controller.get())->matrices();
    result.has_adapj = true;
  }
  return result;
}

struct SweepRow {
  std::string ratio_kind;  // "stiffness" or "damping"
  double ratio = 1.0;
  std::string controller;
  int seed_index = 0;
  double mae_mm = 0.0;
  double err_std_mm = 0.0;
};

struct AdapJTrendRow {
  std::string ratio_kind;
  double ratio = 1.0;
  int seed_index = 0;
  AdapJMatrices initial;
  AdapJMatrices final_;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<AdapJTrendRow> trends;
};

/// Property-ratio sweep: controllers are initialized on the nominal (ratio 1)
/// plant per seed, then asked to track on plants with scaled stiffness or
/// damping. Trials run on a small worker pool; results are slot-addressed so
/// the outcome is identical for any thread count (max_workers 0 = one per
/// hardware thread).
inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned max_workers = 0) {
  cfg.plant.validate();
  std::vector<ControllerKind> kinds;
  kinds.reserve(cfg.sweep.controllers.size());
  for (const std::string& name : cfg.sweep.controllers)
    kinds.push_back(controller_kind_from_string(name));

  TrajectorySpec spec = cfg.trajectory;
  spec.dt = cfg.plant.dt;
  if (spec.amplitude <= 0)
    spec.amplitude = cfg.sweep.amplitude_fraction * cfg.plant.workspace_halfspan_mm();
  const Trajectory traj = gen_trajectory(spec, cfg.plant.workspace_halfspan_vec());

  std::vector<ControllerInit> inits;
  inits.reserve(static_cast<std::size_t>(cfg.sweep.seeds));
  for (int i = 0; i < cfg.sweep.seeds; ++i)
    inits.push_back(prepare_init(cfg, kinds, mix_seed(cfg.seed, static_cast<std::uint64_t>(i))));

  struct Trial {
    std::string kind_name;
    double stiffness = 1.0, damping = 1.0;
    ControllerKind controller;
    int seed_index = 0;
  };
  std::vector<Trial> trials;
  for (double r : cfg.sweep.stiffness_ratios)
    for (ControllerKind c : kinds)
      for (int s = 0; s < cfg.sweep.seeds; ++s)
        trials.push_back({"stiffness", r, 1.0, c, s});
  for (double r : cfg.sweep.damping_ratios)
    for (ControllerKind c : kinds)
      for (int s = 0; s < cfg.sweep.seeds; ++s)
        trials.push_back({"damping", 1.0, r, c, s});

  SweepResult result;
  result.rows.resize(trials.size());
  std::vector<AdapJTrendRow> trend_slots(trials.size());
  std::vector<char> trend_set(trials.size(), 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= trials.size()) return;
      const Trial& trial = trials[i];
      ExperimentConfig tcfg = cfg;
      tcfg.plant = apply_property_ratio(cfg.plant, trial.stiffness, trial.damping);
      std::unique_ptr<Controller> controller =
          make_controller(trial.controller, tcfg, inits[static_cast<std::size_t>(trial.seed_index)]);
      controller->set_updates_enabled(cfg.update_enabled);
      SoftBendingPlant plant(tcfg.plant);
      const RunReport report = run_tracking_loop(*controller, plant, traj);
      result.rows[i] = {trial.kind_name,
                        trial.kind_name == "stiffness" ? trial.stiffness : trial.damping,
                        to_string(trial.controller),
                        trial.seed_index,
                        report.mae_mm(),
                        report.err_std_mm()};
      if (trial.controller == ControllerKind::AdapJ) {
        trend_slots[i] = {result.rows[i].ratio_kind, result.rows[i].ratio, trial.seed_index,
                          inits[static_cast<std::size_t>(trial.seed_index)].adapj,
                          static_cast<AdapJController*>(controller.get())->matrices()};
        trend_set[i] = 1;
      }
    }
  };
  const unsigned hw =
      max_workers > 0 ? max_workers : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(hw, trials.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  for (std::size_t i = 0; i < trials.size(); ++i)
    if (trend_set[i]) result.trends.push_back(std::move(trend_slots[i]));
  return result;
}

struct RoundStats {
  int round = 0;
  std::string disturbance = "none";
  double mae_mm = 0.0;
  double err_std_mm = 0.0;
  std::vector<double> mean_a;  // per actuation channel
  std::vector<double> se_a;
};

struct DisturbanceProtocolReport {
  RunReport report;
  std::size_t round_steps = 0;
  std::vector<RoundStats> rounds;
};

/// Five consecutive reference rounds with the schedule {none, impulses, none,
/// obstacle, none}; reports per-round tracking and actuation statistics.
inline DisturbanceProtocolReport run_disturbance_protocol(const ExperimentConfig& cfg) {
  cfg.plant.validate();
  if (cfg.plant.axes != 2)
    fail(ErrorCategory::Config, "disturbance protocol requires the 2-DoF plant");
  if (cfg.controller != ControllerKind::AdapJ)
    fail(ErrorCategory::Config, "disturbance protocol runs the adapj controller");

  TrajectorySpec spec = cfg.trajectory;
  spec.kind = TrajectoryKind::Lissajous;
  spec.dt = cfg.plant.dt;
  spec.liss_rounds = cfg.rounds;
  const Trajectory traj = gen_trajectory(spec, cfg.plant.workspace_halfspan_vec());
  const std::size_t round_steps = traj.desired.size() / static_cast<std::size_t>(cfg.rounds);

  DisturbanceSpec dist;
  dist.seed = detail::disturbance_seed(cfg.seed);
  if (cfg.disturb.enabled && cfg.rounds >= 5) {
    dist.schedule.push_back({1 * round_steps, 2 * round_steps,
                             ImpulseDisturbance{cfg.disturb.impulse_magnitude,
                                                cfg.disturb.impulse_probability}});
    dist.schedule.push_back({3 * round_steps, 4 * round_steps,
                             ObstacleDisturbance{cfg.disturb.obstacle_axis,
                                                 cfg.disturb.obstacle_angle,
                                                 cfg.disturb.obstacle_stiffness}});
  }

  ControllerInit init = prepare_init(cfg, {ControllerKind::AdapJ}, cfg.seed);
  std::unique_ptr<Controller> controller = make_controller(ControllerKind::AdapJ, cfg, init);
  controller->set_updates_enabled(cfg.update_enabled);
  SoftBendingPlant plant(cfg.plant);

  DisturbanceProtocolReport out;
  out.report = run_tracking_loop(*controller, plant, traj, dist);
  out.round_steps = round_steps;
  for (int r = 0; r < cfg.rounds; ++r) {
    const std::size_t begin = static_cast<std::size_t>(r) * round_steps;
    const std::size_t end = begin + round_steps;
    RoundStats st;
    st.round = r + 1;
    if (cfg.disturb.enabled && r == 1) st.disturbance = "impulse";
    if (cfg.disturb.enabled && r == 3) st.disturbance = "obstacle";
    st.mae_mm = out.report.mae_mm(begin, end);
    st.err_std_mm = out.report.err_std_mm(begin, end);
    for (Eigen::Index c = 0; c < cfg.plant.axes; ++c) {
      const auto [mean, se] = out.report.actuation_mean_se(c, begin, end);
      st.mean_a.push_back(mean);
      st.se_a.push_back(se);
    }
    out.rounds.push_back(std::move(st));
  }
  return out;
}

struct BenchRow {
  std::string controller;
  double median_seconds = 0.0;
  double p95_seconds = 0.0;
  int iterations = 0;
};

/// Median / p95 wall time of act(+update) per controller on identical fixed
/// inputs; a warmup block is excluded from the statistics.
inline std::vector<BenchRow> bench_step_time(const ExperimentConfig& cfg,
                                             const std::vector<ControllerKind>& kinds,
                                             int iterations) {
  if (iterations < 1000)
    fail(ErrorCategory::Config, "bench_step_time: need at least 1000 iterations");
  ControllerInit init = prepare_init(cfg, kinds, cfg.seed);
  const double w = cfg.plant.workspace_halfspan_mm();
  const StateVec sd = StateVec::Constant(cfg.plant.axes, 0.25 * w);
  const StateVec s = StateVec::Constant(cfg.plant.axes, 0.10 * w);
  const StateVec s_next = StateVec::Constant(cfg.plant.axes, 0.12 * w);

  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  double sink = 0.0;
  for (ControllerKind kind : kinds) {
    std::unique_ptr<Controller> controller = make_controller(kind, cfg, init);
    controller->reset(s);
    constexpr int warmup = 200;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(iterations));
    for (int i = 0; i < warmup + iterations; ++i) {
      const auto t0 = clock::now();
      const ActuationVec a = controller->act(sd, s);
      controller->observe(s_next);
      const auto t1 = clock::now();
      sink += a.sum();
      if (i >= warmup) samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    rows.push_back({std::string(to_string(kind)), median(samples), percentile(samples, 0.95),
                    iterations});
  }
  if (!std::isfinite(sink)) fail(ErrorCategory::Numeric, "bench_step_time: diverged");
  return rows;
}

}  // namespace adapj
