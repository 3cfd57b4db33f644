#pragma once

#include "adapj/types.hpp"

namespace adapj {

/// Splits each signed actuation channel onto its antagonistic chamber pair:
/// positive chamber gets max{0, c}, negative chamber gets max{0, -c}.
/// Result layout: [c0+, c0-, c1+, c1-, ...], length 2 * d_a.
inline Eigen::VectorXd split_channels(const ActuationVec& a) {
  if (!all_finite(a)) fail(ErrorCategory::Numeric, "split_channels: non-finite actuation");
  Eigen::VectorXd chambers(2 * a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    chambers[2 * i] = std::max(0.0, a[i]);
    chambers[2 * i + 1] = std::max(0.0, -a[i]);
  }
  return chambers;
}

/// Inverse of split_channels: signed channel = positive - negative chamber.
inline ActuationVec merge_channels(const Eigen::VectorXd& chambers) {
  if (chambers.size() % 2 != 0)
    fail(ErrorCategory::Dimension, "merge_channels: chamber vector length must be even");
  ActuationVec a(chambers.size() / 2);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a[i] = chambers[2 * i] - chambers[2 * i + 1];
  return a;
}

}  // namespace adapj
