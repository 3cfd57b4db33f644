#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "adapj/types.hpp"

namespace adapj {

/// The extended inverse Jacobian gain block: actuation is read off as
///   a_t = A0 * sd_{t+1} + A1 * s_t + B0 * a_{t-1}
/// with all three matrices independent (no inverse-Jacobian coupling).
struct AdapJMatrices {
  Eigen::MatrixXd A0;  // d_a x d_s, gain on the desired next state
  Eigen::MatrixXd A1;  // d_a x d_s, gain on the current state
  Eigen::MatrixXd B0;  // d_a x d_a, gain on the previous actuation

  static AdapJMatrices zero(Eigen::Index ds, Eigen::Index da) {
    return {Eigen::MatrixXd::Zero(da, ds), Eigen::MatrixXd::Zero(da, ds),
            Eigen::MatrixXd::Zero(da, da)};
  }

  Eigen::Index state_dim() const { return A0.cols(); }
  Eigen::Index act_dim() const { return A0.rows(); }

  void validate() const {
    const Eigen::Index ds = state_dim(), da = act_dim();
    if (A1.rows() != da || A1.cols() != ds || B0.rows() != da || B0.cols() != da)
      fail(ErrorCategory::Dimension, "inconsistent AdapJ matrix dimensions");
    if (!all_finite(A0) || !all_finite(A1) || !all_finite(B0))
      fail(ErrorCategory::Numeric, "non-finite AdapJ matrices");
  }

  /// Stacked parameter form: omega is (2*ds + da) x da with
  /// omega^T * phi = A0 s_next + A1 s + B0 a_prev.
  Eigen::MatrixXd to_omega() const {
    const Eigen::Index ds = state_dim(), da = act_dim();
    Eigen::MatrixXd omega(2 * ds + da, da);
    omega.topRows(ds) = A0.transpose();
    omega.middleRows(ds, ds) = A1.transpose();
    omega.bottomRows(da) = B0.transpose();
    return omega;
  }

  static AdapJMatrices from_omega(const Eigen::MatrixXd& omega, Eigen::Index ds,
                                  Eigen::Index da) {
    if (omega.rows() != 2 * ds + da || omega.cols() != da)
      fail(ErrorCategory::Dimension, "bad omega shape");
    AdapJMatrices m;
    m.A0 = omega.topRows(ds).transpose();
    m.A1 = omega.middleRows(ds, ds).transpose();
    m.B0 = omega.bottomRows(da).transpose();
    return m;
  }
};

struct AdapJConfig {
  double rho = 0.5;              // update step size
  double delta_omega_max = 0.1;  // Frobenius cap on a single update
  double ridge_lambda = 1e-8;    // regularizer in the rank-one inverse
  int init_epochs = 200;
  int init_batch = 32;
  double init_lr = 1e-2;
  std::uint64_t init_seed = 0;
  ActuationBounds bounds;

  void validate() const {
    if (!(rho > 0)) fail(ErrorCategory::Config, "adapj rho must be positive");
    if (!(delta_omega_max > 0)) fail(ErrorCategory::Config, "adapj delta_omega_max must be positive");
    if (ridge_lambda < 0) fail(ErrorCategory::Config, "adapj ridge_lambda must be >= 0");
    if (init_epochs < 1 || init_batch < 1 || !(init_lr > 0))
      fail(ErrorCategory::Config, "adapj init hyperparameters must be positive");
    bounds.validate();
  }
};

/// Regressor phi = [s_next; s; a_prev] (for the action law, sd_next takes the
/// place of s_next).
using RegressorVec = Eigen::VectorXd;

inline RegressorVec make_regressor(const StateVec& s_next, const StateVec& s,
                                   const ActuationVec& a_prev) {
  RegressorVec phi(s_next.size() + s.size() + a_prev.size());
  phi << s_next, s, a_prev;
  return phi;
}

/// Action law: a = clamp(A0 sd_next + A1 s + B0 a_prev). Sets *saturated when
/// clamping was applied.
inline ActuationVec adapj_act(const AdapJMatrices& m, const StateVec& sd_next,
                              const StateVec& s, const ActuationVec& a_prev,
                              const ActuationBounds& bounds, bool* saturated = nullptr) {
  if (sd_next.size() != m.state_dim() || s.size() != m.state_dim() ||
      a_prev.size() != m.act_dim())
    fail(ErrorCategory::Dimension, "adapj_act: input dimensions do not match matrices");
  ActuationVec a = m.A0 * sd_next + m.A1 * s + m.B0 * a_prev;
  const bool sat = bounds.clamp(a);
  if (saturated) *saturated = sat;
  return a;
}

struct AdapJUpdateResult {
  AdapJMatrices matrices;
  double step_norm = 0.0;  // Frobenius norm of the applied parameter change
  bool clipped = false;
  bool skipped = false;
};

/// Single-sample Gauss-Newton step on the inverse model. With phi the
/// regressor built from the measured transition and E the prediction error of
/// the executed actuation, the parameter change is
///   delta = rho * phi * E^T / (phi^T phi + lambda)
/// (the minimum-norm resolution of the rank-one normal matrix), rescaled to
/// Frobenius norm delta_omega_max when it exceeds that cap.
inline AdapJUpdateResult adapj_update(const AdapJMatrices& m, const StateVec& s_next,
                                      const StateVec& s, const ActuationVec& a_prev,
                                      const ActuationVec& a_executed, const AdapJConfig& cfg) {
  cfg.validate();
  m.validate();
  if (a_executed.size() != m.act_dim())
    fail(ErrorCategory::Dimension, "adapj_update: executed actuation size mismatch");
  const RegressorVec phi = make_regressor(s_next, s, a_prev);
  if (phi.size() != 2 * m.state_dim() + m.act_dim())
    fail(ErrorCategory::Dimension, "adapj_update: regressor size mismatch");

  AdapJUpdateResult res{m, 0.0, false, false};
  const double denom = phi.squaredNorm() + cfg.ridge_lambda;
  if (denom <= 0.0) {  // phi = 0 with no ridge: no information in this sample
    res.skipped = true;
    return res;
  }
  const Eigen::MatrixXd omega = m.to_omega();
  const Eigen::VectorXd error = a_executed - omega.transpose() * phi;
  Eigen::MatrixXd delta = (cfg.rho / denom) * (phi * error.transpose());
  const double norm = delta.norm();
  if (norm > cfg.delta_omega_max) {
    delta *= cfg.delta_omega_max / norm;
    res.clipped = true;
  }
  res.step_norm = delta.norm();
  res.matrices = AdapJMatrices::from_omega(omega + delta, m.state_dim(), m.act_dim());
  return res;
}

/// Batch initialization from babbling data: minimizes the actuation
/// prediction error sum_t ||a_t - (A0 s_{t+1} + A1 s_t + B0 a_{t-1})||^2 over
/// t in [1, N-2] by mini-batch gradient descent. The regressors are whitened
/// internally (consecutive states are nearly collinear at control rate, so
/// the raw problem is badly conditioned) and the solution is folded back
/// through the same linear reparameterization.
inline AdapJMatrices adapj_init(const BabblingDataset& data, const AdapJConfig& cfg) {
  cfg.validate();
  data.validate();
  const Eigen::Index ds = data.state_dim();
  const Eigen::Index da = data.act_dim();
  const Eigen::Index p = 2 * ds + da;
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index rows = n - 2;  // t = 1 .. N-2

  Eigen::MatrixXd regressors(rows, p);
  Eigen::MatrixXd targets(rows, da);
  for (Eigen::Index t = 1; t <= n - 2; ++t) {
    regressors.row(t - 1) << data.samples[t + 1].state.transpose(),
        data.samples[t].state.transpose(), data.samples[t - 1].actuation.transpose();
    targets.row(t - 1) = data.samples[t].actuation.transpose();
  }

  Eigen::VectorXd prescale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double rms = std::sqrt(regressors.col(j).squaredNorm() / rows);
    prescale[j] = rms > 1e-12 ? rms : 1.0;
  }
  const Eigen::MatrixXd scaled = regressors * prescale.cwiseInverse().asDiagonal();

  const auto rank = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(scaled).rank();
  if (rank < p)
    fail(ErrorCategory::Data,
         "adapj_init: degenerate regressors (rank " + std::to_string(rank) + " of " +
             std::to_string(p) + "); collect richer motor babbling data");

  const Eigen::MatrixXd gram = scaled.transpose() * scaled / static_cast<double>(rows);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    fail(ErrorCategory::Data, "adapj_init: degenerate regressors; collect richer motor babbling data");
  // White features: X = scaled * L^-T has unit sample covariance.
  const Eigen::MatrixXd white =
      llt.matrixL().solve(scaled.transpose()).transpose();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, da);  // whitened-feature parameters
  std::vector<Eigen::Index> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.init_seed);
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.init_batch, rows);
  for (int epoch = 0; epoch < cfg.init_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < rows; start += batch) {
      const Eigen::Index b = std::min(batch, rows - start);
      Eigen::MatrixXd xb(b, p), yb(b, da);
      for (Eigen::Index i = 0; i < b; ++i) {
        xb.row(i) = white.row(order[start + i]);
        yb.row(i) = targets.row(order[start + i]);
      }
      const Eigen::MatrixXd grad = (2.0 / b) * xb.transpose() * (xb * w - yb);
      w -= cfg.init_lr * grad;
    }
  }
  if (!all_finite(w)) fail(ErrorCategory::Numeric, "adapj_init: optimization diverged");

  // Fold back: omega = D^-1 L^-T w.
  const Eigen::MatrixXd omega =
      prescale.cwiseInverse().asDiagonal() *
      llt.matrixL().transpose().solve(w);
  return AdapJMatrices::from_omega(omega, ds, da);
}

}  // namespace adapj
