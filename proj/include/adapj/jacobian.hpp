#pragma once

#include "adapj/types.hpp"

namespace adapj {

/// Damped pseudo-inverse via SVD. Singular values below tol are dropped; if
/// that leaves the matrix rank-deficient and ridge > 0, the ridge-regularized
/// inverse sigma/(sigma^2 + ridge) is used instead. *degenerate reports the
/// fallback.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double ridge = 0.0,
                                      bool* degenerate = nullptr, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
  const bool rank_deficient = (sv.array() <= cutoff).any() || m.rows() == 0;
  if (degenerate) *degenerate = rank_deficient;
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (rank_deficient && ridge > 0.0)
      inv[i] = sv[i] / (sv[i] * sv[i] + ridge);
    else
      inv[i] = sv[i] > cutoff ? 1.0 / sv[i] : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

enum class JacobianActVariant { Inverse, Optimal };
enum class JacobianUpdateMode { Broyden, Regularized };

/// Classical Jacobian controller state. The action weights (alpha1, alpha2)
/// select the optimal-control variant's cost; the update weights (beta1,
/// beta2) select the update rule: a zero weight selects the hard-constraint
/// Broyden update, otherwise the regularized rank-one closed form.
struct JacobianState {
  Eigen::MatrixXd J;     // d_s x d_a
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double beta1 = 0.0;
  double beta2 = 1.0;
  double smoothing = 1.0;  // J <- J + smoothing * deltaJ; 1 = no averaging
  double min_da = 1e-8;    // Broyden skip threshold on ||da||
  double ridge = 1e-8;

  Eigen::Index state_dim() const { return J.rows(); }
  Eigen::Index act_dim() const { return J.cols(); }

  JacobianUpdateMode update_mode() const {
    return (beta1 == 0.0 || beta2 == 0.0) ? JacobianUpdateMode::Broyden
                                          : JacobianUpdateMode::Regularized;
  }

  void validate() const {
    if (!all_finite(J)) fail(ErrorCategory::Numeric, "Jacobian matrix non-finite");
    if (alpha1 < 0 || alpha2 < 0 || beta1 < 0 || beta2 < 0)
      fail(ErrorCategory::Config, "Jacobian cost weights must be >= 0");
  }
};

struct JacobianInitResult {
  JacobianState state;
  bool settled = true;  // false: settle horizon hit while still moving
};

/// Estimates J column-by-column: actuate each channel by +delta from rest,
/// let the plant settle over a fixed horizon, and take the secant
/// (s_after - s_rest) / delta. Works on any plant exposing reset/step/tip.
template <class Plant>
JacobianInitResult jacobian_init(Plant& plant, double delta, int settle_steps = 400,
                                 double settle_tol_mm = 1e-4) {
  if (!(delta > 0)) fail(ErrorCategory::Config, "jacobian_init: increment must be positive");
  const Eigen::Index ds = plant.state_dim();
  const Eigen::Index da = plant.act_dim();
  JacobianInitResult res;
  res.state.J.resize(ds, da);
  for (Eigen::Index j = 0; j < da; ++j) {
    plant.reset();
    const StateVec s_before = plant.tip();
    ActuationVec a = ActuationVec::Zero(da);
    a[j] = delta;
    StateVec prev = s_before;
    StateVec cur = s_before;
    bool settled = false;
    for (int k = 0; k < settle_steps; ++k) {
      plant.step(a);
      prev = cur;
      cur = plant.tip();
      if ((cur - prev).norm() < settle_tol_mm) {
        settled = true;
        break;
      }
    }
    if (!settled) res.settled = false;  // keep the last measurement anyway
    res.state.J.col(j) = (cur - s_before) / delta;
  }
  plant.reset();
  return res;
}

/// Action selection. Inverse variant: a = J^+ (sd_next - s) + a_prev.
/// Optimal variant solves
///   min alpha1 ||a||^2 + alpha2 ||a - a_prev||^2  s.t.  J (a - a_prev) = dsd
/// in closed form (Euclidean projection of the unconstrained minimizer onto
/// the constraint set).
inline ActuationVec jacobian_act(const JacobianState& st, const StateVec& sd_next,
                                 const StateVec& s, const ActuationVec& a_prev,
                                 JacobianActVariant variant,
                                 const ActuationBounds& bounds, bool* saturated = nullptr,
                                 bool* degenerate = nullptr) {
  st.validate();
  if (sd_next.size() != st.state_dim() || s.size() != st.state_dim() ||
      a_prev.size() != st.act_dim())
    fail(ErrorCategory::Dimension, "jacobian_act: input dimension mismatch");
  const StateVec dsd = sd_next - s;
  const Eigen::MatrixXd pinv = pseudo_inverse(st.J, st.ridge, degenerate);
  ActuationVec a;
  if (variant == JacobianActVariant::Inverse) {
    a = pinv * dsd + a_prev;
  } else {
    const double wsum = st.alpha1 + st.alpha2;
    if (wsum == 0.0)
      fail(ErrorCategory::Config, "Jacobian optimal variant needs (alpha1, alpha2) != (0, 0)");
    const ActuationVec center = (st.alpha2 / wsum) * a_prev;  // unconstrained minimizer
    const StateVec target = dsd + st.J * a_prev;              // constraint: J a = target
    a = center + pinv * (target - st.J * center);
  }
  const bool sat = bounds.clamp(a);
  if (saturated) *saturated = sat;
  return a;
}

struct JacobianUpdateResult {
  JacobianState state;
  double step_norm = 0.0;
  bool skipped = false;
};

/// Feedback update from an observed secant pair (ds, da).
/// Regularized mode (both betas > 0): deltaJ = beta1 r da^T / (beta2 + beta1 da^T da)
/// with r = ds - J da. Broyden mode: deltaJ = r da^T / (da^T da), skipped for
/// ||da|| below the threshold, and (J + deltaJ) da = ds holds exactly.
inline JacobianUpdateResult jacobian_update(const JacobianState& st, const StateVec& ds,
                                            const ActuationVec& da) {
  if (ds.size() != st.state_dim() || da.size() != st.act_dim())
    fail(ErrorCategory::Dimension, "jacobian_update: dimension mismatch");
  JacobianUpdateResult res{st, 0.0, false};
  const StateVec residual = ds - st.J * da;
  const double da2 = da.squaredNorm();
  Eigen::MatrixXd delta;
  if (st.update_mode() == JacobianUpdateMode::Broyden) {
    if (std::sqrt(da2) < st.min_da) {
      res.skipped = true;
      return res;
    }
    delta = residual * da.transpose() / da2;
  } else {
    delta = st.beta1 * residual * da.transpose() / (st.beta2 + st.beta1 * da2);
  }
  delta *= st.smoothing;
  res.step_norm = delta.norm();
  res.state.J += delta;
  return res;
}

}  // namespace adapj
