#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adapj/common.hpp"

namespace adapj {

/// Robot state (tip position, millimeters). Length d_s: 1 for the bending
/// finger, 2 for the planar manipulator.
using StateVec = Eigen::VectorXd;

/// Signed actuation, one entry per actuation pair (a_h, optionally a_v),
/// in normalized units.
using ActuationVec = Eigen::VectorXd;

/// Box constraints applied to every actuation channel.
struct ActuationBounds {
  double lo = -1.0;
  double hi = 1.0;

  void validate() const {
    if (!(hi > lo)) fail(ErrorCategory::Config, "actuation bounds require hi > lo");
  }

  double span() const { return hi - lo; }

  /// Clamps in place; returns true if any channel was saturated.
  bool clamp(ActuationVec& a) const {
    bool saturated = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] < lo) { a[i] = lo; saturated = true; }
      else if (a[i] > hi) { a[i] = hi; saturated = true; }
    }
    return saturated;
  }
};

/// One (state, actuation) pair recorded at timestep t.
struct Sample {
  long t = 0;
  StateVec state;
  ActuationVec actuation;
};

struct DatasetMeta {
  std::string plant = "unknown";
  std::uint64_t seed = 0;
};

/// Time-ordered excitation data from random actuation; every controller's
/// initialization consumes one of these.
struct BabblingDataset {
  std::vector<Sample> samples;
  double dt = 0.1;
  DatasetMeta meta;

  std::size_t size() const { return samples.size(); }
  Eigen::Index state_dim() const { return samples.empty() ? 0 : samples.front().state.size(); }
  Eigen::Index act_dim() const { return samples.empty() ? 0 : samples.front().actuation.size(); }

  /// First n samples as an independent dataset (the low-data budget).
  BabblingDataset head(std::size_t n) const {
    BabblingDataset out;
    out.dt = dt;
    out.meta = meta;
    const std::size_t m = std::min(n, samples.size());
    out.samples.assign(samples.begin(), samples.begin() + static_cast<long>(m));
    return out;
  }

  void validate() const {
    if (samples.size() < 3)
      fail(ErrorCategory::Data, "babbling dataset needs at least 3 samples");
    if (!(dt > 0)) fail(ErrorCategory::Config, "dataset dt must be positive");
    const Eigen::Index ds = samples.front().state.size();
    const Eigen::Index da = samples.front().actuation.size();
    long prev_t = samples.front().t - 1;
    for (const Sample& s : samples) {
      if (s.t <= prev_t) fail(ErrorCategory::Data, "sample timesteps must be strictly increasing");
      if (s.t != prev_t + 1) fail(ErrorCategory::Data, "sample timesteps must be uniformly spaced");
      if (s.state.size() != ds || s.actuation.size() != da)
        fail(ErrorCategory::Dimension, "inconsistent sample dimensions in dataset");
      if (!all_finite(s.state) || !all_finite(s.actuation))
        fail(ErrorCategory::Numeric, "non-finite sample in dataset");
      prev_t = s.t;
    }
  }
};

/// Per-channel affine range, mapped onto [-1, 1] by rescale().
struct ScaleMap {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static ScaleMap symmetric(Eigen::Index n, double halfspan) {
    ScaleMap m;
    m.lo = Eigen::VectorXd::Constant(n, -halfspan);
    m.hi = Eigen::VectorXd::Constant(n, halfspan);
    return m;
  }

  static ScaleMap from_bounds(Eigen::Index n, const ActuationBounds& b) {
    ScaleMap m;
    m.lo = Eigen::VectorXd::Constant(n, b.lo);
    m.hi = Eigen::VectorXd::Constant(n, b.hi);
    return m;
  }

  Eigen::Index size() const { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size()) fail(ErrorCategory::Dimension, "scale map lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(hi[i] > lo[i])) fail(ErrorCategory::Config, "scale map requires hi > lo per channel");
  }
};

/// Time-indexed desired states at fixed dt.
struct Trajectory {
  std::vector<StateVec> desired;
  double dt = 0.1;
  std::string kind;

  std::size_t size() const { return desired.size(); }
  Eigen::Index dim() const { return desired.empty() ? 0 : desired.front().size(); }
};

}  // namespace adapj
