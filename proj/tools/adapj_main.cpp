// Command-line front end: motor babbling, controller initialization,
// closed-loop tracking, property sweeps, the five-round disturbance
// protocol, step-time benchmarks, and the linearization study.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adapj/csv.hpp"
#include "adapj/harness.hpp"
#include "adapj/linapprox.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string controller;
  bool no_update = false;
};

adapj::ExperimentConfig build_config(const CliOptions& opt, adapj::KeyValueConfig& kv_echo) {
  adapj::ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    kv_echo = adapj::KeyValueConfig::load(opt.config_path);
    adapj::apply_config(cfg, kv_echo);
  }
  if (opt.seed_given) cfg.seed = opt.seed;
  if (!opt.controller.empty())
    cfg.controller = adapj::controller_kind_from_string(opt.controller);
  if (opt.no_update) cfg.update_enabled = false;
  return cfg;
}

json config_echo(const adapj::ExperimentConfig& cfg, const adapj::KeyValueConfig& kv) {
  json echo = json::object();
  for (const auto& [k, v] : kv.entries()) echo[k] = v;
  echo["run.seed"] = cfg.seed;
  echo["controller"] = adapj::to_string(cfg.controller);
  echo["run.update_enabled"] = cfg.update_enabled;
  return echo;
}

json versions_json() {
  return json{{"adapj", adapj::kVersion}, {"compiler", __VERSION__}};
}

void write_json(const fs::path& path, const json& j) {
  auto f = adapj::csv::open_out(path.string());
  f << j.dump(2) << "\n";
}

fs::path ensure_out(const CliOptions& opt) {
  fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) adapj::fail(adapj::ErrorCategory::Io, "cannot create output directory '" + opt.out_dir + "'");
  return dir;
}

void write_run_outputs(const fs::path& dir, const adapj::RunReport& report,
                       const adapj::ExperimentConfig& cfg, const adapj::KeyValueConfig& kv,
                       const std::string& command, json extra = json::object()) {
  adapj::write_timeseries_csv((dir / "timeseries.csv").string(), report);
  json j{{"command", command},
         {"versions", versions_json()},
         {"config", config_echo(cfg, kv)},
         {"aggregates",
          {{"steps", report.steps.size()},
           {"mae_mm", report.mae_mm()},
           {"err_std_mm", report.err_std_mm()},
           {"compute_time_ms", {{"mean", 1e3 * report.mean_compute_seconds()},
                                {"p95", 1e3 * report.p95_compute_seconds()}}}}}};
  if (report.aborted_reason) j["aborted"] = *report.aborted_reason;
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(dir / "report.json", j);
}

int cmd_babble(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  const fs::path dir = ensure_out(opt);
  adapj::SoftBendingPlant plant(cfg.plant);
  const adapj::BabblingDataset data = adapj::run_babbling(
      plant, cfg.babble.samples, adapj::detail::babble_seed(cfg.seed), cfg.babble);
  adapj::write_dataset_csv((dir / "dataset.csv").string(), data);
  write_json(dir / "report.json",
             json{{"command", "babble"},
                  {"versions", versions_json()},
                  {"config", config_echo(cfg, kv)},
                  {"aggregates", {{"samples", data.size()}, {"dt", data.dt}}}});
  std::cout << "babble: " << data.size() << " samples -> " << (dir / "dataset.csv").string()
            << "\n";
  return 0;
}

void write_controller_artifacts(const fs::path& dir, adapj::ControllerKind kind,
                                const adapj::ControllerInit& init) {
  using adapj::write_matrix_blocks_csv;
  switch (kind) {
    case adapj::ControllerKind::AdapJ:
      write_matrix_blocks_csv((dir / "adapj_matrices.csv").string(),
                              {{"A0", init.adapj.A0}, {"A1", init.adapj.A1}, {"B0", init.adapj.B0}});
      break;
    case adapj::ControllerKind::Jacobian:
      write_matrix_blocks_csv((dir / "jacobian.csv").string(), {{"J", init.jacobian.J}});
      break;
    case adapj::ControllerKind::Mpc:
      write_matrix_blocks_csv((dir / "mpc_model.csv").string(),
                              {{"P0", init.mpc.P0}, {"P1", init.mpc.P1}, {"P2", init.mpc.P2}});
      break;
    case adapj::ControllerKind::Rnn:
    case adapj::ControllerKind::Ifc: {
      write_matrix_blocks_csv((dir / "rnn_weights.csv").string(),
                              {{"w_in", init.rnn_full.w_in},
                               {"w_rec", init.rnn_full.w_rec},
                               {"b_h", init.rnn_full.b_h},
                               {"w_out", init.rnn_full.w_out},
                               {"b_out", init.rnn_full.b_out}});
      auto f = adapj::csv::open_out((dir / "rnn_training.csv").string());
      f << "epoch,loss\n";
      for (std::size_t e = 0; e < init.rnn_full_report.epoch_loss.size(); ++e)
        f << e << "," << adapj::csv::fmt(init.rnn_full_report.epoch_loss[e]) << "\n";
      break;
    }
    case adapj::ControllerKind::Rnn100: {
      write_matrix_blocks_csv((dir / "rnn_weights.csv").string(),
                              {{"w_in", init.rnn_small.w_in},
                               {"w_rec", init.rnn_small.w_rec},
                               {"b_h", init.rnn_small.b_h},
                               {"w_out", init.rnn_small.w_out},
                               {"b_out", init.rnn_small.b_out}});
      auto f = adapj::csv::open_out((dir / "rnn_training.csv").string());
      f << "epoch,loss\n";
      for (std::size_t e = 0; e < init.rnn_small_report.epoch_loss.size(); ++e)
        f << e << "," << adapj::csv::fmt(init.rnn_small_report.epoch_loss[e]) << "\n";
      break;
    }
  }
}

int cmd_init(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  const fs::path dir = ensure_out(opt);
  const adapj::ControllerInit init = adapj::prepare_init(cfg, {cfg.controller}, cfg.seed);
  adapj::write_dataset_csv((dir / "dataset.csv").string(), init.data);
  write_controller_artifacts(dir, cfg.controller, init);
  write_json(dir / "report.json", json{{"command", "init"},
                                       {"versions", versions_json()},
                                       {"config", config_echo(cfg, kv)},
                                       {"aggregates", {{"samples", init.data.size()}}}});
  std::cout << "init: " << adapj::to_string(cfg.controller) << " initialized from "
            << init.data.size() << " samples\n";
  return 0;
}

int cmd_track(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  const fs::path dir = ensure_out(opt);
  cfg.plant.validate();
  {
    adapj::TrajectorySpec spec = cfg.trajectory;
    spec.dt = cfg.plant.dt;
    adapj::write_trajectory_csv(
        (dir / "trajectory.csv").string(),
        adapj::gen_trajectory(spec, cfg.plant.workspace_halfspan_vec()));
  }
  const adapj::TrackingResult result = adapj::run_tracking(cfg);
  if (result.has_adapj) {
    adapj::write_matrix_blocks_csv((dir / "adapj_matrices_initial.csv").string(),
                                   {{"A0", result.adapj_initial.A0},
                                    {"A1", result.adapj_initial.A1},
                                    {"B0", result.adapj_initial.B0}});
    adapj::write_matrix_blocks_csv((dir / "adapj_matrices_final.csv").string(),
                                   {{"A0", result.adapj_final.A0},
                                    {"A1", result.adapj_final.A1},
                                    {"B0", result.adapj_final.B0}});
  }
  write_run_outputs(dir, result.report, cfg, kv, "track");
  std::cout << "track: controller=" << result.report.controller
            << " steps=" << result.report.steps.size() << " mae_mm=" << result.report.mae_mm()
            << " std_mm=" << result.report.err_std_mm() << "\n";
  if (result.report.aborted_reason) {
    std::cerr << "run aborted: " << *result.report.aborted_reason << "\n";
    return 5;
  }
  return 0;
}

int cmd_sweep(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  const fs::path dir = ensure_out(opt);
  const adapj::SweepResult result = adapj::run_sweep(cfg);
  {
    auto f = adapj::csv::open_out((dir / "sweep.csv").string());
    f << "ratio_kind,ratio,controller,seed,mae_mm,err_std_mm\n";
    for (const adapj::SweepRow& r : result.rows)
      f << r.ratio_kind << "," << adapj::csv::fmt(r.ratio) << "," << r.controller << ","
        << r.seed_index << "," << adapj::csv::fmt(r.mae_mm) << ","
        << adapj::csv::fmt(r.err_std_mm) << "\n";
  }
  {
    auto f = adapj::csv::open_out((dir / "adapj_trends.csv").string());
    f << "ratio_kind,ratio,seed,block,row,col,initial,final\n";
    for (const adapj::AdapJTrendRow& r : result.trends) {
      auto emit = [&](const char* name, const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1) {
        for (Eigen::Index i = 0; i < m0.rows(); ++i)
          for (Eigen::Index j = 0; j < m0.cols(); ++j)
            f << r.ratio_kind << "," << adapj::csv::fmt(r.ratio) << "," << r.seed_index << ","
              << name << "," << i << "," << j << "," << adapj::csv::fmt(m0(i, j)) << ","
              << adapj::csv::fmt(m1(i, j)) << "\n";
      };
      emit("A0", r.initial.A0, r.final_.A0);
      emit("A1", r.initial.A1, r.final_.A1);
      emit("B0", r.initial.B0, r.final_.B0);
    }
  }
  write_json(dir / "report.json",
             json{{"command", "sweep"},
                  {"versions", versions_json()},
                  {"config", config_echo(cfg, kv)},
                  {"aggregates", {{"rows", result.rows.size()}, {"trends", result.trends.size()}}}});
  std::cout << "sweep: " << result.rows.size() << " rows -> " << (dir / "sweep.csv").string()
            << "\n";
  return 0;
}

int cmd_disturb(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  cfg.plant.axes = 2;  // the protocol is defined on the 2-DoF plant
  cfg.controller = adapj::ControllerKind::AdapJ;
  const fs::path dir = ensure_out(opt);
  const adapj::DisturbanceProtocolReport result = adapj::run_disturbance_protocol(cfg);
  {
    auto f = adapj::csv::open_out((dir / "rounds.csv").string());
    f << "round,disturbance,mae_mm,err_std_mm";
    for (int c = 0; c < cfg.plant.axes; ++c) f << ",mean_a_" << c << ",se_a_" << c;
    f << "\n";
    for (const adapj::RoundStats& r : result.rounds) {
      f << r.round << "," << r.disturbance << "," << adapj::csv::fmt(r.mae_mm) << ","
        << adapj::csv::fmt(r.err_std_mm);
      for (std::size_t c = 0; c < r.mean_a.size(); ++c)
        f << "," << adapj::csv::fmt(r.mean_a[c]) << "," << adapj::csv::fmt(r.se_a[c]);
      f << "\n";
    }
  }
  json rounds = json::array();
  for (const adapj::RoundStats& r : result.rounds)
    rounds.push_back(json{{"round", r.round},
                          {"disturbance", r.disturbance},
                          {"mae_mm", r.mae_mm},
                          {"mean_a", r.mean_a},
                          {"se_a", r.se_a}});
  write_run_outputs(dir, result.report, cfg, kv, "disturb", json{{"rounds", rounds}});
  std::cout << "disturb: " << result.rounds.size() << " rounds, overall mae_mm="
            << result.report.mae_mm() << "\n";
  return result.report.aborted_reason ? 5 : 0;
}

int cmd_bench(const CliOptions& opt) {
  adapj::KeyValueConfig kv;
  adapj::ExperimentConfig cfg = build_config(opt, kv);
  const fs::path dir = ensure_out(opt);
  std::vector<adapj::ControllerKind> kinds;
  for (const std::string& name : cfg.sweep.controllers)
    kinds.push_back(adapj::controller_kind_from_string(name));
  const auto rows = adapj::bench_step_time(cfg, kinds, cfg.bench_iterations);
  {
    auto f = adapj::csv::open_out((dir / "bench.csv").string());
    f << "controller,median_us,p95_us,iterations\n";
    for (const adapj::BenchRow& r : rows)
      f << r.controller << "," << adapj::csv::fmt(1e6 * r.median_seconds) << ","
        << adapj::csv::fmt(1e6 * r.p95_seconds) << "," << r.iterations << "\n";
  }
  json jrows = json::array();
  for (const adapj::BenchRow& r : rows) {
    jrows.push_back(json{{"controller", r.controller},
                         {"median_us", 1e6 * r.median_seconds},
                         {"p95_us", 1e6 * r.p95_seconds}});
    std::cout << "bench: " << r.controller << " median=" << 1e6 * r.median_seconds
              << "us p95=" << 1e6 * r.p95_seconds << "us\n";
  }
  write_json(dir / "report.json", json{{"command", "bench"},
                                       {"versions", versions_json()},
                                       {"config", config_echo(cfg, kv)},
                                       {"aggregates", {{"rows", jrows}}}});
  return 0;
}

int cmd_linapprox(const CliOptions& opt) {
  const fs::path dir = ensure_out(opt);
  const adapj::lin::LinapproxStudy st = adapj::lin::run_linapprox_study();
  const auto f2 = [](double x, double y) { return -(x * x + y * y) / 6.0; };
  {
    auto f = adapj::csv::open_out((dir / "grid_errors.csv").string());
    f << "x,y,f,independent,coupled,err_independent,err_coupled\n";
    for (double x : st.xs)
      for (double y : st.ys) {
        const double z = f2(x, y);
        const double zi = st.independent(x, y);
        const double zc = st.coupled(x, y);
        f << adapj::csv::fmt(x) << "," << adapj::csv::fmt(y) << "," << adapj::csv::fmt(z) << ","
          << adapj::csv::fmt(zi) << "," << adapj::csv::fmt(zc) << ","
          << adapj::csv::fmt(std::abs(z - zi)) << "," << adapj::csv::fmt(std::abs(z - zc))
          << "\n";
      }
  }
  {
    auto f = adapj::csv::open_out((dir / "mae.csv").string());
    f << "variant,mae\n";
    f << "independent," << adapj::csv::fmt(st.mae_independent) << "\n";
    f << "coupled," << adapj::csv::fmt(st.mae_coupled) << "\n";
  }
  write_json(dir / "report.json",
             json{{"command", "linapprox"},
                  {"versions", versions_json()},
                  {"aggregates",
                   {{"mae_independent", st.mae_independent}, {"mae_coupled", st.mae_coupled}}}});
  std::cout << "linapprox: independent mae=" << st.mae_independent
            << " coupled mae=" << st.mae_coupled << "\n";
  return 0;
}

int exit_code(adapj::ErrorCategory c) {
  switch (c) {
    case adapj::ErrorCategory::Config: return 2;
    case adapj::ErrorCategory::Data: return 3;
    case adapj::ErrorCategory::Dimension: return 4;
    case adapj::ErrorCategory::Numeric: return 5;
    case adapj::ErrorCategory::Io: return 6;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adapj: adaptive extended Jacobian control benchmark harness"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string command;
  for (const auto& [name, desc] :
       std::vector<std::pair<std::string, std::string>>{
           {"babble", "collect a motor-babbling dataset"},
           {"init", "initialize a controller from babbling data"},
           {"track", "run a closed-loop tracking experiment"},
           {"sweep", "tracking error across stiffness/damping ratios"},
           {"disturb", "five-round disturbance/obstacle protocol (2-DoF)"},
           {"bench", "per-step compute-time benchmark"},
           {"linapprox", "tangent-plane linearization study"}}) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opt.config_path, "flat key=value config file");
    sub->add_option("--out", opt.out_dir, "output directory (default: out)");
    sub->add_option("--seed", opt.seed, "experiment seed")->each([&opt](const std::string&) {
      opt.seed_given = true;
    });
    sub->add_option("--controller", opt.controller,
                    "adapj|jacobian|mpc|rnn|rnn100|ifc");
    sub->add_flag("--no-update", opt.no_update, "freeze controller parameters during tracking");
    sub->callback([&command, name = name]() { command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (command == "babble") return cmd_babble(opt);
    if (command == "init") return cmd_init(opt);
    if (command == "track") return cmd_track(opt);
    if (command == "sweep") return cmd_sweep(opt);
    if (command == "disturb") return cmd_disturb(opt);
    if (command == "bench") return cmd_bench(opt);
    if (command == "linapprox") return cmd_linapprox(opt);
    std::cerr << "unknown command\n";
    return 1;
  } catch (const adapj::Error& e) {
    std::cerr << nlohmann::json{{"error", {{"category", adapj::to_string(e.category())},
                                           {"message", e.what()}}}}
                     .dump()
              << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"category", "internal"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 1;
  }
}
