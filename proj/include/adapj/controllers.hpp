#pragma once

#include <deque>
#include <memory>
#include <string>

#include "adapj/adapj_controller.hpp"
#include "adapj/ifc.hpp"
#include "adapj/jacobian.hpp"
#include "adapj/mpc.hpp"
#include "adapj/rnn.hpp"

namespace adapj {

enum class ControllerKind { AdapJ, Jacobian, Mpc, Rnn, Rnn100, Ifc };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::AdapJ: return "adapj";
    case ControllerKind::Jacobian: return "jacobian";
    case ControllerKind::Mpc: return "mpc";
    case ControllerKind::Rnn: return "rnn";
    case ControllerKind::Rnn100: return "rnn100";
    case ControllerKind::Ifc: return "ifc";
  }
  return "unknown";
}

inline ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "adapj") return ControllerKind::AdapJ;
  if (s == "jacobian") return ControllerKind::Jacobian;
  if (s == "mpc") return ControllerKind::Mpc;
  if (s == "rnn") return ControllerKind::Rnn;
  if (s == "rnn100") return ControllerKind::Rnn100;
  if (s == "ifc") return ControllerKind::Ifc;
  fail(ErrorCategory::Config, "unknown controller '" + s + "'");
}

/// Closed-loop adapter shared by the benchmark harness. The loop is:
/// act(sd_{t+1}, s_t) -> plant executes -> observe(s_{t+1}) -> next step.
/// Each instance owns its history; single-threaded use only.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual void reset(const StateVec& s0) = 0;
  virtual ActuationVec act(const StateVec& sd_next, const StateVec& s) = 0;
  /// Digests the measured next state; returns the parameter-update norm
  /// (0 for controllers without online updates or with updates disabled).
  virtual double observe(const StateVec& s_next) = 0;

  void set_updates_enabled(bool on) { updates_enabled_ = on; }
  bool updates_enabled() const { return updates_enabled_; }
  bool last_saturated() const { return last_saturated_; }

 protected:
  bool updates_enabled_ = true;
  bool last_saturated_ = false;
};

class AdapJController : public Controller {
 public:
  AdapJController(AdapJMatrices m, AdapJConfig cfg) : m_(std::move(m)), cfg_(std::move(cfg)) {
    m_.validate();
    cfg_.validate();
  }

  std::string name() const override { return "adapj"; }

  void reset(const StateVec& s0) override {
    s_ = s0;
    a_prev_ = ActuationVec::Zero(m_.act_dim());
    a_exec_ = a_prev_;
  }

  ActuationVec act(const StateVec& sd_next, const StateVec& s) override {
    s_ = s;
    a_exec_ = adapj_act(m_, sd_next, s, a_prev_, cfg_.bounds, &last_saturated_);
    return a_exec_;
  }

  double observe(const StateVec& s_next) override {
    double norm = 0.0;
    if (updates_enabled_) {
      AdapJUpdateResult res = adapj_update(m_, s_next, s_, a_prev_, a_exec_, cfg_);
      m_ = std::move(res.matrices);
      norm = res.step_norm;
    }
    a_prev_ = a_exec_;
    return norm;
  }

  const AdapJMatrices& matrices() const { return m_; }
  const AdapJConfig& config() const { return cfg_; }

 private:
  AdapJMatrices m_;
  AdapJConfig cfg_;
  StateVec s_;
  ActuationVec a_prev_, a_exec_;
};

class JacobianController : public Controller {
 public:
  JacobianController(JacobianState st, JacobianActVariant variant, ActuationBounds bounds)
      : st_(std::move(st)), variant_(variant), bounds_(bounds) {}

  std::string name() const override { return "jacobian"; }

  void reset(const StateVec& s0) override {
    s_ = s0;
    a_prev_ = ActuationVec::Zero(st_.act_dim());
    a_exec_ = a_prev_;
  }

  ActuationVec act(const StateVec& sd_next, const StateVec& s) override {
    s_ = s;
    a_exec_ = jacobian_act(st_, sd_next, s, a_prev_, variant_, bounds_, &last_saturated_);
    return a_exec_;
  }

  double observe(const StateVec& s_next) override {
    double norm = 0.0;
    if (updates_enabled_) {
      JacobianUpdateResult res = jacobian_update(st_, s_next - s_, a_exec_ - a_prev_);
      st_ = std::move(res.state);
      norm = res.step_norm;
    }
    a_prev_ = a_exec_;
    return norm;
  }

  const JacobianState& state() const { return st_; }

 private:
  JacobianState st_;
  JacobianActVariant variant_;
  ActuationBounds bounds_;
  StateVec s_;
  ActuationVec a_prev_, a_exec_;
};

class MpcController : public Controller {
 public:
  explicit MpcController(MpcState st) : st_(std::move(st)) { st_.validate(); }

  std::string name() const override { return "mpc"; }

  void reset(const StateVec& s0) override {
    s_ = s0;
    a_prev_ = ActuationVec::Zero(st_.act_dim());
    a_exec_ = a_prev_;
  }

  ActuationVec act(const StateVec& sd_next, const StateVec& s) override {
    s_ = s;
    a_exec_ = mpc_act(st_, sd_next, s, a_prev_, st_.cfg.bounds, &last_saturated_);
    return a_exec_;
  }

  double observe(const StateVec& s_next) override {
    double norm = 0.0;
    if (updates_enabled_) {
      MpcUpdateResult res = mpc_update(st_, s_next, s_, a_exec_, a_prev_);
      st_ = std::move(res.state);
      norm = res.step_norm;
    }
    a_prev_ = a_exec_;
    return norm;
  }

  const MpcState& state() const { return st_; }

 private:
  MpcState st_;
  StateVec s_;
  ActuationVec a_prev_, a_exec_;
};

/// Trained network behind the loop interface. Weights are frozen: observe()
/// only advances the signal history, there is no online update path.
class RnnController : public Controller {
 public:
  RnnController(RnnWeights weights, RnnConfig cfg, std::string name = "rnn")
      : w_(std::move(weights)), cfg_(std::move(cfg)), name_(std::move(name)) {
    w_.validate();
  }

  std::string name() const override { return name_; }

  void reset(const StateVec& s0) override {
    states_.assign(static_cast<std::size_t>(w_.n), s0);
    const ActuationVec a0 = ActuationVec::Zero(w_.output_dim());
    acts_.assign(static_cast<std::size_t>(w_.n), a0);
    a_exec_ = a0;
  }

  ActuationVec act(const StateVec& sd_next, const StateVec& s) override {
    push_state(s);
    a_exec_ = rnn_act(w_, make_window(sd_next), cfg_.act_scale, cfg_.bounds, &last_saturated_);
    return a_exec_;
  }

  double observe(const StateVec&) override {
    push_act(a_exec_);
    return 0.0;
  }

  /// Raw (pre-clamp) network output for the current history; lets the
  /// feedback wrapper compose before clamping.
  ActuationVec raw_act(const StateVec& sd_next, const StateVec& s) {
    push_state(s);
    const Eigen::MatrixXd window = make_window(sd_next);
    std::vector<Eigen::MatrixXd> steps;
    steps.reserve(static_cast<std::size_t>(w_.n));
    for (int t = 0; t < w_.n; ++t) steps.push_back(window.col(t));
    a_exec_ = scale_from_unit(rnn_forward_batch(w_, steps), cfg_.act_scale);
    return a_exec_;
  }

  void note_executed(const ActuationVec& a) { a_exec_ = a; }
  const RnnWeights& weights() const { return w_; }
  const RnnConfig& config() const { return cfg_; }

 private:
  void push_state(const StateVec& s) {
    states_.push_back(s);
    states_.pop_front();
  }

  void push_act(const ActuationVec& a) {
    acts_.push_back(a);
    acts_.pop_front();
  }

  /// Step i input: [state_{i}; act_{i}] with the desired state replacing the
  /// (unknown) next state in the final step, mirroring build_windows().
  Eigen::MatrixXd make_window(const StateVec& sd_next) const {
    const Eigen::Index ds = states_.back().size();
    const Eigen::Index da = acts_.back().size();
    Eigen::MatrixXd win(ds + da, w_.n);
    const auto n = static_cast<std::size_t>(w_.n);
    for (std::size_t i = 0; i < n; ++i) {
      const StateVec& s = (i + 1 < n) ? states_[i + 1] : sd_next;
      win.col(static_cast<Eigen::Index>(i)).head(ds) = scale_to_unit(s, cfg_.state_scale);
      win.col(static_cast<Eigen::Index>(i)).tail(da) = scale_to_unit(acts_[i], cfg_.act_scale);
    }
    return win;
  }

  RnnWeights w_;
  RnnConfig cfg_;
  std::string name_;
  std::deque<StateVec> states_;  // s_{t-n+1} .. s_t
  std::deque<ActuationVec> acts_;  // a_{t-n} .. a_{t-1}
  ActuationVec a_exec_;
};

class IfcController : public Controller {
 public:
  IfcController(RnnWeights weights, RnnConfig cfg, IfcConfig ifc)
      : inner_(std::move(weights), std::move(cfg), "ifc-inner"), ifc_(std::move(ifc)) {
    ifc_.validate();
  }

  std::string name() const override { return "ifc"; }

  void reset(const StateVec& s0) override { inner_.reset(s0); }

  ActuationVec act(const StateVec& sd_next, const StateVec& s) override {
    const ActuationVec a_rnn = inner_.raw_act(sd_next, s);
    const ActuationVec a = ifc_act(a_rnn, sd_next, s, ifc_, inner_.config().state_scale,
                                   inner_.config().bounds, &last_saturated_);
    inner_.note_executed(a);
    return a;
  }

  double observe(const StateVec& s_next) override { return inner_.observe(s_next); }

 private:
  RnnController inner_;
  IfcConfig ifc_;
};

}  // namespace adapj
