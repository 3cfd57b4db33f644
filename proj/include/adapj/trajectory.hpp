#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "adapj/types.hpp"

namespace adapj {

enum class TrajectoryKind { SineThenSteps, Spiral, Star, Lissajous };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::SineThenSteps: return "sine_then_steps";
    case TrajectoryKind::Spiral: return "spiral";
    case TrajectoryKind::Star: return "star";
    case TrajectoryKind::Lissajous: return "lissajous";
  }
  return "unknown";
}

inline TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "sine_then_steps") return TrajectoryKind::SineThenSteps;
  if (s == "spiral") return TrajectoryKind::Spiral;
  if (s == "star") return TrajectoryKind::Star;
  if (s == "lissajous") return TrajectoryKind::Lissajous;
  fail(ErrorCategory::Config, "unknown trajectory kind '" + s + "'");
}

/// Reference trajectory parameters. amplitude <= 0 selects the default of
/// 80% of the workspace half-span.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::SineThenSteps;
  double dt = 0.1;
  double duration = 500.0;  // seconds (star derives its length from speed instead)
  double amplitude = 0.0;   // mm; <= 0 -> 0.8 * workspace half-span

  // sine_then_steps (1-D): sinusoid segment, then held setpoints.
  double sine_period = 50.0;    // s
  double sine_duration = 250.0; // s
  std::vector<double> step_fractions{-1.0, 0.25, -0.5, 0.75};  // of amplitude

  // spiral (2-D Archimedean)
  double spiral_turns = 3.0;

  // star (2-D closed polygon at constant speed); inner_ratio = 1 gives a
  // plain regular polygon (the "triangle" task is star_points=3, ratio 1).
  int star_points = 5;
  double star_inner_ratio = 0.5;
  double star_speed = 8.0;  // mm/s

  // lissajous (2-D, rounds of a closed figure)
  int liss_fx = 1;
  int liss_fy = 2;
  int liss_rounds = 5;
  double liss_round_duration = 30.0;  // s

  void validate() const {
    if (!(dt > 0)) fail(ErrorCategory::Config, "trajectory dt must be positive");
    if (kind != TrajectoryKind::Star && !(duration > 0))
      fail(ErrorCategory::Config, "trajectory duration must be positive");
    if (kind == TrajectoryKind::Star && !(star_speed > 0))
      fail(ErrorCategory::Config, "star speed must be positive");
    if (kind == TrajectoryKind::Lissajous && liss_rounds < 1)
      fail(ErrorCategory::Config, "lissajous rounds must be >= 1");
  }
};

namespace detail {

inline void check_workspace(const StateVec& p, const Eigen::VectorXd& halfspan,
                            TrajectoryKind kind) {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (std::abs(p[i]) > halfspan[i] * (1.0 + 1e-12))
      fail(ErrorCategory::Config, std::string("trajectory '") + to_string(kind) +
                                      "' leaves the workspace on axis " + std::to_string(i));
}

}  // namespace detail

/// Generates the desired-state sequence. `workspace_halfspan_mm` holds the
/// reachable half-span per state axis; every generated point must stay inside
/// that box. Deterministic: equal arguments give bit-identical sequences.
inline Trajectory gen_trajectory(const TrajectorySpec& spec,
                                 const Eigen::VectorXd& workspace_halfspan_mm) {
  spec.validate();
  const Eigen::Index dims = workspace_halfspan_mm.size();
  const double two_pi = 2.0 * std::numbers::pi;

  const double amp =
      spec.amplitude > 0 ? spec.amplitude : 0.8 * workspace_halfspan_mm.minCoeff();

  Trajectory traj;
  traj.dt = spec.dt;
  traj.kind = to_string(spec.kind);

  switch (spec.kind) {
    case TrajectoryKind::SineThenSteps: {
      if (dims != 1)
        fail(ErrorCategory::Config, "sine_then_steps is a 1-D trajectory");
      const auto n = static_cast<std::size_t>(std::llround(spec.duration / spec.dt));
      const double hold =
          spec.step_fractions.empty()
              ? 0.0
              : std::max(spec.dt, (spec.duration - spec.sine_duration) /
                                      static_cast<double>(spec.step_fractions.size()));
      traj.desired.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * spec.dt;
        double v = 0.0;
        if (t < spec.sine_duration || spec.step_fractions.empty()) {
          v = amp * std::sin(two_pi * t / spec.sine_period);
        } else {
          auto k = static_cast<std::size_t>((t - spec.sine_duration) / hold);
          k = std::min(k, spec.step_fractions.size() - 1);
          v = amp * spec.step_fractions[k];
        }
        traj.desired.push_back(StateVec::Constant(1, v));
      }
      break;
    }
    case TrajectoryKind::Spiral: {
      if (dims != 2) fail(ErrorCategory::Config, "spiral is a 2-D trajectory");
      const auto n = static_cast<std::size_t>(std::llround(spec.duration / spec.dt));
      if (n < 2) fail(ErrorCategory::Config, "spiral duration too short");
      traj.desired.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        const double r = amp * u;
        const double phi = two_pi * spec.spiral_turns * u;
        StateVec p(2);
        p << r * std::cos(phi), r * std::sin(phi);
        traj.desired.push_back(p);
      }
      break;
    }
    case TrajectoryKind::Star: {
      if (dims != 2) fail(ErrorCategory::Config, "star is a 2-D trajectory");
      if (spec.star_points < 3)
        fail(ErrorCategory::Config, "star needs at least 3 points");
      // Closed polyline: outer vertices, optionally interleaved inner ones.
      std::vector<Eigen::Vector2d> verts;
      const int v = spec.star_points;
      const bool star = spec.star_inner_ratio < 1.0;
      for (int i = 0; i < v; ++i) {
        const double ao = two_pi * i / v + std::numbers::pi / 2.0;
        verts.emplace_back(amp * std::cos(ao), amp * std::sin(ao));
        if (star) {
          const double ai = ao + std::numbers::pi / v;
          const double r = amp * spec.star_inner_ratio;
          verts.emplace_back(r * std::cos(ai), r * std::sin(ai));
        }
      }
      std::vector<double> cumlen{0.0};
      for (std::size_t i = 0; i < verts.size(); ++i) {
        const Eigen::Vector2d& a = verts[i];
        const Eigen::Vector2d& b = verts[(i + 1) % verts.size()];
        cumlen.push_back(cumlen.back() + (b - a).norm());
      }
      const double perimeter = cumlen.back();
      const double step = spec.star_speed * spec.dt;
      const auto segments = static_cast<std::size_t>(std::ceil(perimeter / step));
      traj.desired.reserve(segments + 1);
      for (std::size_t i = 0; i <= segments; ++i) {
        double s = std::min(static_cast<double>(i) * step, perimeter);
        std::size_t e = 0;
        while (e + 1 < cumlen.size() - 1 && cumlen[e + 1] <= s) ++e;
        const double seg_len = cumlen[e + 1] - cumlen[e];
        const double u = seg_len > 0 ? (s - cumlen[e]) / seg_len : 0.0;
        const Eigen::Vector2d p =
            verts[e] + u * (verts[(e + 1) % verts.size()] - verts[e]);
        StateVec q(2);
        q << p.x(), p.y();
        traj.desired.push_back(q);
      }
      break;
    }
    case TrajectoryKind::Lissajous: {
      if (dims != 2) fail(ErrorCategory::Config, "lissajous is a 2-D trajectory");
      const auto round_pts =
          static_cast<std::size_t>(std::llround(spec.liss_round_duration / spec.dt));
      if (round_pts < 2) fail(ErrorCategory::Config, "lissajous round too short");
      const auto n = round_pts * static_cast<std::size_t>(spec.liss_rounds);
      traj.desired.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Phase from the within-round index so consecutive rounds repeat
        // bit-exactly.
        const double u = static_cast<double>(i % round_pts) / static_cast<double>(round_pts);
        StateVec p(2);
        p << amp * std::sin(two_pi * spec.liss_fx * u),
            amp * std::sin(two_pi * spec.liss_fy * u);
        traj.desired.push_back(p);
      }
      break;
    }
  }

  if (traj.desired.empty()) fail(ErrorCategory::Config, "generated trajectory is empty");
  for (const StateVec& p : traj.desired) detail::check_workspace(p, workspace_halfspan_mm, spec.kind);
  return traj;
}

}  // namespace adapj
