#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "adapj/types.hpp"

namespace adapj {

/// Per-axis constant-curvature tip coordinate: x = L (1 - cos theta) / theta,
/// continuous at theta = 0. Input radians, output millimeters.
inline double tip_x_mm(double theta, double length_m) {
  if (std::abs(theta) >= 2.0 * std::numbers::pi)
    fail(ErrorCategory::Numeric, "tip_x_mm: |theta| must be below 2*pi");
  const double l_mm = length_m * 1e3;
  if (std::abs(theta) < 1e-8) return 0.5 * l_mm * theta;  // series limit
  return l_mm * (1.0 - std::cos(theta)) / theta;
}

/// Simulated bending-segment plant: per axis a linear second-order bending
/// ODE integrated with semi-implicit Euler, mapped to tip position through
/// constant-curvature kinematics. One axis models the finger (a_h), two axes
/// the planar manipulator ([a_h, a_v]).
struct FingerPlantConfig {
  int axes = 1;
  double length = 0.2;             // m
  double bending_stiffness = 0.4;  // N*m^2
  double damping = 1.0;            // N*m*s
  double inertia = 1e-3;           // kg*m^2
  double torque_gain = 0.6714;     // N*m per unit actuation; saturated tip ~= 131.9 mm
  double dt = 0.1;                 // control period, s
  int substeps = 10;
  double stiffness_ratio = 1.0;
  double damping_ratio = 1.0;
  double cross_coupling = 0.0;  // torque fraction leaking to the other axis
  ActuationBounds bounds;

  void validate() const {
    if (axes != 1 && axes != 2) fail(ErrorCategory::Config, "plant axes must be 1 or 2");
    if (!(length > 0 && bending_stiffness > 0 && damping > 0 && inertia > 0 &&
          torque_gain > 0 && dt > 0))
      fail(ErrorCategory::Config, "plant physical parameters must be positive");
    if (!(stiffness_ratio > 0 && damping_ratio > 0))
      fail(ErrorCategory::Config, "plant property ratios must be positive");
    if (substeps < 1) fail(ErrorCategory::Config, "plant substeps must be >= 1");
    bounds.validate();
  }

  double stiffness_eff() const { return bending_stiffness * stiffness_ratio; }
  double damping_eff() const { return damping * damping_ratio; }

  /// Bending angle at equilibrium under the largest admissible actuation.
  double theta_saturated() const {
    const double a_max = std::max(std::abs(bounds.lo), std::abs(bounds.hi));
    return std::min(torque_gain * a_max / stiffness_eff(), std::numbers::pi * 0.999);
  }

  /// Largest reachable |tip_x| in mm. tip_x grows with theta up to
  /// theta ~= 2.331 (where tan(theta/2) = theta), then falls off.
  double workspace_halfspan_mm() const {
    const double theta_peak = 2.331122370414423;
    const double t = std::min(theta_saturated(), theta_peak);
    return tip_x_mm(t, length);
  }

  Eigen::VectorXd workspace_halfspan_vec() const {
    return Eigen::VectorXd::Constant(axes, workspace_halfspan_mm());
  }
};

/// Returns a copy with the property ratios multiplied in; nominal values
/// are untouched.
inline FingerPlantConfig apply_property_ratio(const FingerPlantConfig& cfg,
                                              double stiffness_ratio, double damping_ratio) {
  if (!(stiffness_ratio > 0 && damping_ratio > 0))
    fail(ErrorCategory::Config, "property ratios must be positive");
  FingerPlantConfig out = cfg;
  out.stiffness_ratio = stiffness_ratio;
  out.damping_ratio = damping_ratio;
  return out;
}

struct PlantState {
  Eigen::VectorXd theta;      // rad, one entry per axis
  Eigen::VectorXd theta_dot;  // rad/s
  StateVec tip;               // mm, derived from theta
};

/// Random torque kicks: each control step and axis receives +-magnitude with
/// the given probability.
struct ImpulseDisturbance {
  double magnitude = 0.2;   // N*m
  double probability = 0.3; // per step and axis
};

/// One-sided contact: a spring torque resists bending past the contact angle
/// on the blocked side (contact_angle >= 0 blocks positive bending).
struct ObstacleDisturbance {
  int axis = 1;
  double contact_angle = 0.3;  // rad
  double stiffness = 0.8;      // N*m/rad
};

using Disturbance = std::variant<ImpulseDisturbance, ObstacleDisturbance>;

/// Schedule entry: the disturbance is active for steps in [begin, end).
struct DisturbanceWindow {
  std::size_t begin_step = 0;
  std::size_t end_step = 0;
  Disturbance kind;
};

struct DisturbanceSpec {
  std::vector<DisturbanceWindow> schedule;
  std::uint64_t seed = 0;

  bool empty() const { return schedule.empty(); }

  void validate() const {
    for (const DisturbanceWindow& w : schedule) {
      if (const auto* imp = std::get_if<ImpulseDisturbance>(&w.kind)) {
        if (!std::isfinite(imp->magnitude))
          fail(ErrorCategory::Config, "impulse magnitude must be finite");
        if (!(imp->probability >= 0.0 && imp->probability <= 1.0))
          fail(ErrorCategory::Config, "impulse probability must be in [0, 1]");
      } else if (const auto* obs = std::get_if<ObstacleDisturbance>(&w.kind)) {
        if (!std::isfinite(obs->contact_angle) || !std::isfinite(obs->stiffness) ||
            obs->stiffness < 0)
          fail(ErrorCategory::Config, "obstacle parameters must be finite, stiffness >= 0");
      }
    }
  }
};

/// External torque per axis contributed by the active disturbance windows at
/// one control step. The rng must be dedicated to the disturbance stream so
/// runs stay reproducible; obstacle torque additionally depends on the
/// current bending angles.
inline Eigen::VectorXd inject_disturbance(const DisturbanceSpec& spec, std::size_t step,
                                          const Eigen::VectorXd& theta, std::mt19937_64& rng) {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(theta.size());
  for (const DisturbanceWindow& w : spec.schedule) {
    if (step < w.begin_step || step >= w.end_step) continue;
    if (const auto* imp = std::get_if<ImpulseDisturbance>(&w.kind)) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (Eigen::Index ax = 0; ax < theta.size(); ++ax) {
        const double u = unit(rng);
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        if (u < imp->probability) tau[ax] += sign * imp->magnitude;
      }
    } else if (const auto* obs = std::get_if<ObstacleDisturbance>(&w.kind)) {
      if (obs->axis < 0 || obs->axis >= theta.size())
        fail(ErrorCategory::Dimension, "obstacle axis out of range");
      const double th = theta[obs->axis];
      if (obs->contact_angle >= 0 ? th > obs->contact_angle : th < obs->contact_angle)
        tau[obs->axis] += -obs->stiffness * (th - obs->contact_angle);
    }
  }
  return tau;
}

inline StateVec tip_position(const Eigen::VectorXd& theta, const FingerPlantConfig& cfg) {
  StateVec tip(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) tip[i] = tip_x_mm(theta[i], cfg.length);
  return tip;
}

/// Advances one control period: per axis, semi-implicit Euler substeps of
///   I theta_dd = g*c - k_eff*theta - d_eff*theta_dot + tau_ext
/// (velocity first with the damping term implicit, position with the new
/// velocity; the damping pole d/I is far stiffer than the substep), with
/// theta limited to (-pi, pi) by a hard stop.
inline PlantState plant_step(const PlantState& state, const ActuationVec& a,
                             const FingerPlantConfig& cfg,
                             const Eigen::VectorXd& tau_ext = Eigen::VectorXd()) {
  if (a.size() != cfg.axes) fail(ErrorCategory::Dimension, "plant_step: actuation size mismatch");
  if (!all_finite(state.theta) || !all_finite(state.theta_dot) || !all_finite(a))
    fail(ErrorCategory::Numeric, "plant_step: integration fault (non-finite state)");

  const double h = cfg.dt / cfg.substeps;
  const double k = cfg.stiffness_eff();
  const double d = cfg.damping_eff();
  const double theta_lim = std::numbers::pi * (1.0 - 1e-9);

  PlantState next = state;
  for (int s = 0; s < cfg.substeps; ++s) {
    for (Eigen::Index ax = 0; ax < cfg.axes; ++ax) {
      double torque = cfg.torque_gain * a[ax];
      if (cfg.cross_coupling != 0.0 && cfg.axes == 2)
        torque += cfg.cross_coupling * cfg.torque_gain * a[1 - ax];
      if (tau_ext.size() == cfg.axes) torque += tau_ext[ax];
      next.theta_dot[ax] = (next.theta_dot[ax] + h * (torque - k * next.theta[ax]) / cfg.inertia) /
                           (1.0 + h * d / cfg.inertia);
      next.theta[ax] += h * next.theta_dot[ax];
      if (next.theta[ax] > theta_lim) {
        next.theta[ax] = theta_lim;
        if (next.theta_dot[ax] > 0) next.theta_dot[ax] = 0;
      } else if (next.theta[ax] < -theta_lim) {
        next.theta[ax] = -theta_lim;
        if (next.theta_dot[ax] < 0) next.theta_dot[ax] = 0;
      }
    }
  }
  if (!all_finite(next.theta) || !all_finite(next.theta_dot))
    fail(ErrorCategory::Numeric, "plant_step: integration fault (diverged)");
  next.tip = tip_position(next.theta, cfg);
  return next;
}

/// Stateful wrapper around plant_step. Single-threaded; distinct instances
/// may run on distinct threads.
class SoftBendingPlant {
 public:
  explicit SoftBendingPlant(const FingerPlantConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    reset();
  }

  void reset() {
    state_.theta = Eigen::VectorXd::Zero(cfg_.axes);
    state_.theta_dot = Eigen::VectorXd::Zero(cfg_.axes);
    state_.tip = tip_position(state_.theta, cfg_);
  }

  const PlantState& step(const ActuationVec& a,
                         const Eigen::VectorXd& tau_ext = Eigen::VectorXd()) {
    state_ = plant_step(state_, a, cfg_, tau_ext);
    return state_;
  }

  const PlantState& state() const { return state_; }
  const StateVec& tip() const { return state_.tip; }
  const FingerPlantConfig& config() const { return cfg_; }
  Eigen::Index state_dim() const { return cfg_.axes; }
  Eigen::Index act_dim() const { return cfg_.axes; }

 private:
  FingerPlantConfig cfg_;
  PlantState state_;
};

}  // namespace adapj
