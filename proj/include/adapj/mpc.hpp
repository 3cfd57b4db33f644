#pragma once

#include "adapj/jacobian.hpp"
#include "adapj/types.hpp"

namespace adapj {

/// One-step linear-quadratic controller over a learned forward model
///   s_{t+1} ~ P0 s_t + P1 a_t + P2 a_{t-1}.
/// Mirrors the adaptive controller's information set but keeps the classical
/// forward-model-plus-optimization split.
struct MpcConfig {
  double alpha_da = 1.0;    // actuation-change penalty
  double rho = 0.5;         // online update step size
  double delta_max = 0.5;   // Frobenius cap on a single online update
  double ridge_lambda = 1e-8;
  ActuationBounds bounds;

  void validate() const {
    if (alpha_da < 0) fail(ErrorCategory::Config, "mpc alpha_da must be >= 0");
    if (!(rho > 0) || !(delta_max > 0) || ridge_lambda < 0)
      fail(ErrorCategory::Config, "mpc update parameters invalid");
    bounds.validate();
  }
};

struct MpcState {
  Eigen::MatrixXd P0;  // d_s x d_s
  Eigen::MatrixXd P1;  // d_s x d_a
  Eigen::MatrixXd P2;  // d_s x d_a
  MpcConfig cfg;

  Eigen::Index state_dim() const { return P0.rows(); }
  Eigen::Index act_dim() const { return P1.cols(); }

  void validate() const {
    if (P0.cols() != state_dim() || P1.rows() != state_dim() || P2.rows() != state_dim() ||
        P2.cols() != act_dim())
      fail(ErrorCategory::Dimension, "inconsistent MPC model dimensions");
    if (!all_finite(P0) || !all_finite(P1) || !all_finite(P2))
      fail(ErrorCategory::Numeric, "non-finite MPC model");
  }

  Eigen::MatrixXd to_theta() const {
    const Eigen::Index ds = state_dim(), da = act_dim();
    Eigen::MatrixXd theta(ds + 2 * da, ds);
    theta.topRows(ds) = P0.transpose();
    theta.middleRows(ds, da) = P1.transpose();
    theta.bottomRows(da) = P2.transpose();
    return theta;
  }

  static MpcState from_theta(const Eigen::MatrixXd& theta, Eigen::Index ds, Eigen::Index da,
                             const MpcConfig& cfg) {
    MpcState st;
    st.P0 = theta.topRows(ds).transpose();
    st.P1 = theta.middleRows(ds, da).transpose();
    st.P2 = theta.bottomRows(da).transpose();
    st.cfg = cfg;
    return st;
  }
};

/// Batch least-squares fit of the forward model over t in [1, N-2].
inline MpcState mpc_fit(const BabblingDataset& data, const MpcConfig& cfg) {
  cfg.validate();
  data.validate();
  const Eigen::Index ds = data.state_dim();
  const Eigen::Index da = data.act_dim();
  const Eigen::Index p = ds + 2 * da;
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd regressors(n - 2, p);
  Eigen::MatrixXd targets(n - 2, ds);
  for (Eigen::Index t = 1; t <= n - 2; ++t) {
    regressors.row(t - 1) << data.samples[t].state.transpose(),
        data.samples[t].actuation.transpose(), data.samples[t - 1].actuation.transpose();
    targets.row(t - 1) = data.samples[t + 1].state.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors);
  if (qr.rank() < p)
    fail(ErrorCategory::Data, "mpc_fit: degenerate regressors; collect richer babbling data");
  const Eigen::MatrixXd theta = qr.solve(targets);
  return MpcState::from_theta(theta, ds, da, cfg);
}

struct MpcUpdateResult {
  MpcState state;
  double step_norm = 0.0;
  bool clipped = false;
  bool skipped = false;
};

/// Clipped single-sample Gauss-Newton step on the forward model, same
/// rank-one pseudo-inverse resolution as the adaptive controller's update.
inline MpcUpdateResult mpc_update(const MpcState& st, const StateVec& s_next,
                                  const StateVec& s, const ActuationVec& a,
                                  const ActuationVec& a_prev) {
  st.validate();
  Eigen::VectorXd psi(st.state_dim() + 2 * st.act_dim());
  psi << s, a, a_prev;
  MpcUpdateResult res{st, 0.0, false, false};
  const double denom = psi.squaredNorm() + st.cfg.ridge_lambda;
  if (denom <= 0.0) {
    res.skipped = true;
    return res;
  }
  const Eigen::MatrixXd theta = st.to_theta();
  const Eigen::VectorXd error = s_next - theta.transpose() * psi;
  Eigen::MatrixXd delta = (st.cfg.rho / denom) * (psi * error.transpose());
  const double norm = delta.norm();
  if (norm > st.cfg.delta_max) {
    delta *= st.cfg.delta_max / norm;
    res.clipped = true;
  }
  res.step_norm = delta.norm();
  res.state = MpcState::from_theta(theta + delta, st.state_dim(), st.act_dim(), st.cfg);
  return res;
}

/// Closed-form one-step action:
///   argmin_a ||sd_next - (P0 s + P1 a + P2 a_prev)||^2 + alpha_da ||a - a_prev||^2
/// then clamped. Falls back to a ridge-augmented normal matrix when the
/// unregularized one is near-singular.
inline ActuationVec mpc_act(const MpcState& st, const StateVec& sd_next, const StateVec& s,
                            const ActuationVec& a_prev, const ActuationBounds& bounds,
                            bool* saturated = nullptr) {
  st.validate();
  if (sd_next.size() != st.state_dim() || s.size() != st.state_dim() ||
      a_prev.size() != st.act_dim())
    fail(ErrorCategory::Dimension, "mpc_act: input dimension mismatch");
  const StateVec r = sd_next - st.P0 * s - st.P2 * a_prev;
  const Eigen::Index da = st.act_dim();
  Eigen::MatrixXd normal = st.P1.transpose() * st.P1 +
                           st.cfg.alpha_da * Eigen::MatrixXd::Identity(da, da);
  const Eigen::VectorXd rhs = st.P1.transpose() * r + st.cfg.alpha_da * a_prev;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  ActuationVec a;
  if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-12) {
    a = ldlt.solve(rhs);
  } else {
    normal += 1e-8 * Eigen::MatrixXd::Identity(da, da);
    a = normal.ldlt().solve(rhs);
  }
  const bool sat = bounds.clamp(a);
  if (saturated) *saturated = sat;
  return a;
}

}  // namespace adapj
