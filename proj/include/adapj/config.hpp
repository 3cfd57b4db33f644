#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adapj/adapj_controller.hpp"
#include "adapj/controllers.hpp"
#include "adapj/mpc.hpp"
#include "adapj/plant.hpp"
#include "adapj/rnn.hpp"
#include "adapj/trajectory.hpp"

namespace adapj {

/// Flat `key = value` config file with `#` comments (keys documented in the
/// README). Unused by tests; the CLI layers it over built-in defaults.
class KeyValueConfig {
 public:
  static KeyValueConfig from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        fail(ErrorCategory::Config, "config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) fail(ErrorCategory::Config, "config line " + std::to_string(lineno) + ": empty key");
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCategory::Io, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCategory::Config, "config key '" + key + "': expected a number, got '" + it->second + "'");
    }
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      fail(ErrorCategory::Config, "config key '" + key + "': expected an integer, got '" + it->second + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      fail(ErrorCategory::Config, "config key '" + key + "': expected an unsigned integer");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    fail(ErrorCategory::Config, "config key '" + key + "': expected true/false");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const std::string t = trim(field);
      if (t.empty()) continue;
      try {
        out.push_back(std::stod(t));
      } catch (const std::exception&) {
        fail(ErrorCategory::Config, "config key '" + key + "': bad list entry '" + t + "'");
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> kv_;
};

struct BabbleConfig {
  int samples = 5000;       // full excitation budget
  int adapj_samples = 100;  // the low-data budget (head of the same stream)
  double walk_step = 0.1;   // random-walk step as a fraction of the full range
  bool white_noise = false; // draw i.i.d. instead of a bounded walk
};

struct SweepConfig {
  std::vector<double> stiffness_ratios{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> damping_ratios{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::string> controllers{"adapj", "jacobian", "mpc", "rnn"};
  int seeds = 3;
  double amplitude_fraction = 0.4;  // keep targets reachable at high stiffness
};

struct DisturbProtocolConfig {
  double impulse_magnitude = 0.1;
  double impulse_probability = 0.3;
  int obstacle_axis = 1;
  double obstacle_angle = 0.1;
  double obstacle_stiffness = 2.0;
  bool enabled = true;
};

struct JacobianSetup {
  double alpha1 = 0.0, alpha2 = 1.0;
  double beta1 = 0.0, beta2 = 1.0;
  double smoothing = 1.0;
  double increment = 0.5;
  int settle_steps = 400;
  std::string variant = "inverse";
};

/// Everything one experiment needs; a fixed seed makes the run fully
/// deterministic.
struct ExperimentConfig {
  FingerPlantConfig plant;
  ControllerKind controller = ControllerKind::AdapJ;
  AdapJConfig adapj;
  std::string adapj_warm_start;  // matrices CSV; skips batch initialization
  JacobianSetup jacobian;
  MpcConfig mpc;
  RnnConfig rnn;
  double ifc_gain = 0.2;
  TrajectorySpec trajectory;
  BabbleConfig babble;
  SweepConfig sweep;
  DisturbProtocolConfig disturb;
  std::uint64_t seed = 0;
  int rounds = 5;
  bool update_enabled = true;
  int bench_iterations = 2000;
};

/// Overlays a parsed config file onto the built-in defaults. Key reference in
/// the README.
inline void apply_config(ExperimentConfig& cfg, const KeyValueConfig& kv) {
  cfg.plant.axes = static_cast<int>(kv.get_int("plant.axes", cfg.plant.axes));
  cfg.plant.length = kv.get_double("plant.length", cfg.plant.length);
  cfg.plant.bending_stiffness = kv.get_double("plant.stiffness", cfg.plant.bending_stiffness);
  cfg.plant.damping = kv.get_double("plant.damping", cfg.plant.damping);
  cfg.plant.inertia = kv.get_double("plant.inertia", cfg.plant.inertia);
  cfg.plant.torque_gain = kv.get_double("plant.torque_gain", cfg.plant.torque_gain);
  cfg.plant.dt = kv.get_double("plant.dt", cfg.plant.dt);
  cfg.plant.substeps = static_cast<int>(kv.get_int("plant.substeps", cfg.plant.substeps));
  cfg.plant.stiffness_ratio = kv.get_double("plant.stiffness_ratio", cfg.plant.stiffness_ratio);
  cfg.plant.damping_ratio = kv.get_double("plant.damping_ratio", cfg.plant.damping_ratio);
  cfg.plant.cross_coupling = kv.get_double("plant.cross_coupling", cfg.plant.cross_coupling);
  cfg.plant.bounds.lo = kv.get_double("plant.actuation_lo", cfg.plant.bounds.lo);
  cfg.plant.bounds.hi = kv.get_double("plant.actuation_hi", cfg.plant.bounds.hi);

  if (kv.has("controller"))
    cfg.controller = controller_kind_from_string(kv.get_string("controller", "adapj"));

  cfg.adapj.rho = kv.get_double("adapj.rho", cfg.adapj.rho);
  cfg.adapj.delta_omega_max = kv.get_double("adapj.delta_omega_max", cfg.adapj.delta_omega_max);
  cfg.adapj.ridge_lambda = kv.get_double("adapj.ridge_lambda", cfg.adapj.ridge_lambda);
  cfg.adapj.init_epochs = static_cast<int>(kv.get_int("adapj.init_epochs", cfg.adapj.init_epochs));
  cfg.adapj.init_batch = static_cast<int>(kv.get_int("adapj.init_batch", cfg.adapj.init_batch));
  cfg.adapj.init_lr = kv.get_double("adapj.init_lr", cfg.adapj.init_lr);
  cfg.adapj_warm_start = kv.get_string("adapj.warm_start", cfg.adapj_warm_start);

  cfg.jacobian.alpha1 = kv.get_double("jacobian.alpha1", cfg.jacobian.alpha1);
  cfg.jacobian.alpha2 = kv.get_double("jacobian.alpha2", cfg.jacobian.alpha2);
  cfg.jacobian.beta1 = kv.get_double("jacobian.beta1", cfg.jacobian.beta1);
  cfg.jacobian.beta2 = kv.get_double("jacobian.beta2", cfg.jacobian.beta2);
  cfg.jacobian.smoothing = kv.get_double("jacobian.smoothing", cfg.jacobian.smoothing);
  cfg.jacobian.increment = kv.get_double("jacobian.increment", cfg.jacobian.increment);
  cfg.jacobian.settle_steps =
      static_cast<int>(kv.get_int("jacobian.settle_steps", cfg.jacobian.settle_steps));
  cfg.jacobian.variant = kv.get_string("jacobian.variant", cfg.jacobian.variant);

  cfg.mpc.alpha_da = kv.get_double("mpc.alpha_da", cfg.mpc.alpha_da);
  cfg.mpc.rho = kv.get_double("mpc.rho", cfg.mpc.rho);
  cfg.mpc.delta_max = kv.get_double("mpc.delta_max", cfg.mpc.delta_max);
  cfg.mpc.ridge_lambda = kv.get_double("mpc.ridge_lambda", cfg.mpc.ridge_lambda);

  cfg.rnn.n = static_cast<int>(kv.get_int("rnn.n", cfg.rnn.n));
  cfg.rnn.hidden = static_cast<int>(kv.get_int("rnn.hidden", cfg.rnn.hidden));
  cfg.rnn.lr = kv.get_double("rnn.lr", cfg.rnn.lr);
  cfg.rnn.epochs = static_cast<int>(kv.get_int("rnn.epochs", cfg.rnn.epochs));
  cfg.rnn.batch = static_cast<int>(kv.get_int("rnn.batch", cfg.rnn.batch));

  cfg.ifc_gain = kv.get_double("ifc.gain", cfg.ifc_gain);

  if (kv.has("trajectory.kind"))
    cfg.trajectory.kind = trajectory_kind_from_string(kv.get_string("trajectory.kind", ""));
  cfg.trajectory.duration = kv.get_double("trajectory.duration", cfg.trajectory.duration);
  cfg.trajectory.amplitude = kv.get_double("trajectory.amplitude", cfg.trajectory.amplitude);
  cfg.trajectory.sine_period = kv.get_double("trajectory.sine_period", cfg.trajectory.sine_period);
  cfg.trajectory.sine_duration =
      kv.get_double("trajectory.sine_duration", cfg.trajectory.sine_duration);
  cfg.trajectory.step_fractions =
      kv.get_double_list("trajectory.step_fractions", cfg.trajectory.step_fractions);
  cfg.trajectory.spiral_turns = kv.get_double("trajectory.spiral_turns", cfg.trajectory.spiral_turns);
  cfg.trajectory.star_points =
      static_cast<int>(kv.get_int("trajectory.star_points", cfg.trajectory.star_points));
  cfg.trajectory.star_inner_ratio =
      kv.get_double("trajectory.star_inner_ratio", cfg.trajectory.star_inner_ratio);
  cfg.trajectory.star_speed = kv.get_double("trajectory.star_speed", cfg.trajectory.star_speed);
  cfg.trajectory.liss_fx = static_cast<int>(kv.get_int("trajectory.lissajous_fx", cfg.trajectory.liss_fx));
  cfg.trajectory.liss_fy = static_cast<int>(kv.get_int("trajectory.lissajous_fy", cfg.trajectory.liss_fy));
  cfg.trajectory.liss_rounds =
      static_cast<int>(kv.get_int("trajectory.lissajous_rounds", cfg.trajectory.liss_rounds));
  cfg.trajectory.liss_round_duration =
      kv.get_double("trajectory.lissajous_round_duration", cfg.trajectory.liss_round_duration);

  cfg.babble.samples = static_cast<int>(kv.get_int("babble.samples", cfg.babble.samples));
  cfg.babble.adapj_samples =
      static_cast<int>(kv.get_int("babble.adapj_samples", cfg.babble.adapj_samples));
  cfg.babble.walk_step = kv.get_double("babble.walk_step", cfg.babble.walk_step);
  cfg.babble.white_noise = kv.get_bool("babble.white_noise", cfg.babble.white_noise);

  cfg.sweep.stiffness_ratios =
      kv.get_double_list("sweep.stiffness_ratios", cfg.sweep.stiffness_ratios);
  cfg.sweep.damping_ratios = kv.get_double_list("sweep.damping_ratios", cfg.sweep.damping_ratios);
  if (kv.has("sweep.controllers")) {
    cfg.sweep.controllers.clear();
    std::stringstream ss(kv.get_string("sweep.controllers", ""));
    std::string field;
    while (std::getline(ss, field, ','))
      if (!field.empty()) cfg.sweep.controllers.push_back(field);
  }
  cfg.sweep.seeds = static_cast<int>(kv.get_int("sweep.seeds", cfg.sweep.seeds));
  cfg.sweep.amplitude_fraction =
      kv.get_double("sweep.amplitude_fraction", cfg.sweep.amplitude_fraction);

  cfg.disturb.impulse_magnitude =
      kv.get_double("disturb.impulse_magnitude", cfg.disturb.impulse_magnitude);
  cfg.disturb.impulse_probability =
      kv.get_double("disturb.impulse_probability", cfg.disturb.impulse_probability);
  cfg.disturb.obstacle_axis =
      static_cast<int>(kv.get_int("disturb.obstacle_axis", cfg.disturb.obstacle_axis));
  cfg.disturb.obstacle_angle = kv.get_double("disturb.obstacle_angle", cfg.disturb.obstacle_angle);
  cfg.disturb.obstacle_stiffness =
      kv.get_double("disturb.obstacle_stiffness", cfg.disturb.obstacle_stiffness);
  cfg.disturb.enabled = kv.get_bool("disturb.enabled", cfg.disturb.enabled);

  cfg.seed = kv.get_u64("run.seed", cfg.seed);
  cfg.rounds = static_cast<int>(kv.get_int("run.rounds", cfg.rounds));
  cfg.update_enabled = kv.get_bool("run.update_enabled", cfg.update_enabled);
  cfg.bench_iterations = static_cast<int>(kv.get_int("bench.iterations", cfg.bench_iterations));
}

}  // namespace adapj
