#pragma once

#include <string>

#include "adapj/types.hpp"

namespace adapj {

/// Affine map lo -> -1, hi -> +1 without range checking. Used on live
/// signals that may drift slightly outside the nominal range.
inline Eigen::VectorXd scale_to_unit(const Eigen::VectorXd& x, const ScaleMap& m) {
  if (x.size() != m.size()) fail(ErrorCategory::Dimension, "scale_to_unit: size mismatch");
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    y[i] = -1.0 + 2.0 * (x[i] - m.lo[i]) / (m.hi[i] - m.lo[i]);
  return y;
}

inline Eigen::VectorXd scale_from_unit(const Eigen::VectorXd& y, const ScaleMap& m) {
  if (y.size() != m.size()) fail(ErrorCategory::Dimension, "scale_from_unit: size mismatch");
  Eigen::VectorXd x(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    x[i] = m.lo[i] + (y[i] + 1.0) * 0.5 * (m.hi[i] - m.lo[i]);
  return x;
}

/// Checked rescale onto [-1, 1]; rejects out-of-range input naming the channel.
inline Eigen::VectorXd rescale(const Eigen::VectorXd& x, const ScaleMap& m) {
  if (x.size() != m.size()) fail(ErrorCategory::Dimension, "rescale: size mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= m.lo[i] && x[i] <= m.hi[i]))
      fail(ErrorCategory::Data, "rescale: channel " + std::to_string(i) + " value " +
                                    std::to_string(x[i]) + " outside [" + std::to_string(m.lo[i]) +
                                    ", " + std::to_string(m.hi[i]) + "]");
  }
  return scale_to_unit(x, m);
}

/// Exact inverse of rescale.
inline Eigen::VectorXd rescale_inverse(const Eigen::VectorXd& y, const ScaleMap& m) {
  return scale_from_unit(y, m);
}

}  // namespace adapj
