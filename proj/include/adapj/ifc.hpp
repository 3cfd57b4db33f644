#pragma once

#include "adapj/scaling.hpp"
#include "adapj/types.hpp"

namespace adapj {

/// Iterative feedback compensation on top of a trained inverse controller:
/// the current tracking discrepancy, expressed in normalized state units,
/// is fed back through a fixed gain.
struct IfcConfig {
  Eigen::MatrixXd gamma;  // d_a x d_s, in normalized units

  static IfcConfig diagonal(Eigen::Index da, Eigen::Index ds, double gain = 0.2) {
    IfcConfig c;
    c.gamma = Eigen::MatrixXd::Zero(da, ds);
    c.gamma.diagonal().setConstant(gain);
    return c;
  }

  void validate() const {
    if (!all_finite(gamma)) fail(ErrorCategory::Numeric, "ifc gamma must be finite");
  }
};

/// a = clamp(a_inner + gamma * normalized(sd_now - s_now)).
inline ActuationVec ifc_act(const ActuationVec& a_inner, const StateVec& sd_now,
                            const StateVec& s_now, const IfcConfig& cfg,
                            const ScaleMap& state_scale, const ActuationBounds& bounds,
                            bool* saturated = nullptr) {
  cfg.validate();
  if (cfg.gamma.cols() != sd_now.size() || cfg.gamma.rows() != a_inner.size())
    fail(ErrorCategory::Dimension, "ifc_act: gamma dimensions do not match inputs");
  Eigen::VectorXd err_unit(sd_now.size());
  for (Eigen::Index i = 0; i < sd_now.size(); ++i)
    err_unit[i] = 2.0 * (sd_now[i] - s_now[i]) / (state_scale.hi[i] - state_scale.lo[i]);
  ActuationVec a = a_inner + cfg.gamma * err_unit;
  const bool sat = bounds.clamp(a);
  if (saturated) *saturated = sat;
  return a;
}

}  // namespace adapj
