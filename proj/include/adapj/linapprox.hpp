#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "adapj/common.hpp"

namespace adapj {
namespace lin {

using Fn2 = std::function<double(double, double)>;
using Grad2 = std::function<std::pair<double, double>(double, double)>;
using Fn1 = std::function<double(double)>;

/// z = cx*x + cy*y + c0, anchored so the plane passes through
/// (x0, y0, f(x0, y0)).
struct PlaneApprox {
  double cx = 0.0;
  double cy = 0.0;
  double c0 = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;

  double operator()(double x, double y) const { return cx * x + cy * y + c0; }
};

inline std::pair<double, double> central_gradient(const Fn2& f, double x0, double y0,
                                                  double h = 1e-6) {
  const double gx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
  const double gy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
  return {gx, gy};
}

namespace detail {
inline PlaneApprox plane_through(double cx, double cy, double x0, double y0, double f0) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(f0))
    fail(ErrorCategory::Numeric, "tangent plane: non-finite gradient or value");
  return {cx, cy, f0 - cx * x0 - cy * y0, x0, y0};
}
}  // namespace detail

/// Tangent plane with independent slope coefficients: cx = df/dx, cy = df/dy.
inline PlaneApprox tangent_plane_independent(const Fn2& f, const Grad2& grad, double x0,
                                             double y0) {
  const auto [gx, gy] = grad(x0, y0);
  return detail::plane_through(gx, gy, x0, y0, f(x0, y0));
}

inline PlaneApprox tangent_plane_independent(const Fn2& f, double x0, double y0) {
  const auto [gx, gy] = central_gradient(f, x0, y0);
  return detail::plane_through(gx, gy, x0, y0, f(x0, y0));
}

/// Tangent plane with the slopes coupled as (c, -c); c is the least-squares
/// projection of the gradient onto that constraint line, c = (df/dx - df/dy)/2.
inline PlaneApprox tangent_plane_coupled(const Fn2& f, const Grad2& grad, double x0,
                                         double y0) {
  const auto [gx, gy] = grad(x0, y0);
  const double c = 0.5 * (gx - gy);
  return detail::plane_through(c, -c, x0, y0, f(x0, y0));
}

inline PlaneApprox tangent_plane_coupled(const Fn2& f, double x0, double y0) {
  const auto [gx, gy] = central_gradient(f, x0, y0);
  const double c = 0.5 * (gx - gy);
  return detail::plane_through(c, -c, x0, y0, f(x0, y0));
}

/// Mean absolute deviation between the plane and f over the Cartesian product
/// of the sample grids.
inline double grid_mae(const PlaneApprox& plane, const Fn2& f, const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) fail(ErrorCategory::Config, "grid_mae: empty grid");
  double sum = 0.0;
  for (double x : xs)
    for (double y : ys) sum += std::abs(f(x, y) - plane(x, y));
  return sum / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

struct TangentLine {
  double slope = 0.0;
  double intercept = 0.0;
  double x0 = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

struct PiecewiseLinearResult {
  std::vector<TangentLine> lines;  // one per sample point, ordered
  double max_error = 0.0;          // sup over the evaluation grid
};

/// Tangent-line approximation of a scalar function: each sample point
/// contributes the local tangent, and a query is answered by the tangent of
/// the nearest sample. Reports the max deviation over a dense grid on
/// [lo, hi].
inline PiecewiseLinearResult piecewise_linear_1d(const Fn1& f, const Fn1& dfdx,
                                                 const std::vector<double>& samples,
                                                 double lo, double hi,
                                                 int eval_points = 2001) {
  if (samples.size() < 2)
    fail(ErrorCategory::Config, "piecewise_linear_1d: need at least 2 samples");
  if (!(hi > lo)) fail(ErrorCategory::Config, "piecewise_linear_1d: empty interval");
  PiecewiseLinearResult res;
  for (double s : samples) {
    const double slope = dfdx(s);
    const double value = f(s);
    if (!std::isfinite(slope) || !std::isfinite(value))
      fail(ErrorCategory::Numeric, "piecewise_linear_1d: non-finite tangent");
    res.lines.push_back({slope, value - slope * s, s});
  }
  auto nearest = [&samples](double x) {
    std::size_t best = 0;
    double best_d = std::abs(x - samples[0]);
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double d = std::abs(x - samples[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  for (int i = 0; i < eval_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (eval_points - 1);
    const double approx = res.lines[nearest(x)](x);
    res.max_error = std::max(res.max_error, std::abs(f(x) - approx));
  }
  return res;
}

inline PiecewiseLinearResult piecewise_linear_1d(const Fn1& f, const std::vector<double>& samples,
                                                 double lo, double hi, int eval_points = 2001) {
  const double h = 1e-6;
  return piecewise_linear_1d(
      f, [&f, h](double x) { return (f(x + h) - f(x - h)) / (2.0 * h); }, samples, lo, hi,
      eval_points);
}

/// The worked linearization study: tangent planes of z = -(x^2 + y^2)/6 at
/// (-2, 1) with and without slope coupling, scored on the 5x5 grid around the
/// base point.
struct LinapproxStudy {
  PlaneApprox independent;
  PlaneApprox coupled;
  double mae_independent = 0.0;
  double mae_coupled = 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
};

inline LinapproxStudy run_linapprox_study() {
  const Fn2 f = [](double x, double y) { return -(x * x + y * y) / 6.0; };
  const Grad2 grad = [](double x, double y) {
    return std::make_pair(-x / 3.0, -y / 3.0);
  };
  LinapproxStudy st;
  st.independent = tangent_plane_independent(f, grad, -2.0, 1.0);
  st.coupled = tangent_plane_coupled(f, grad, -2.0, 1.0);
  st.xs = {-2.4, -2.2, -2.0, -1.8, -1.6};
  st.ys = {0.6, 0.8, 1.0, 1.2, 1.4};
  st.mae_independent = grid_mae(st.independent, f, st.xs, st.ys);
  st.mae_coupled = grid_mae(st.coupled, f, st.xs, st.ys);
  return st;
}

}  // namespace lin
}  // namespace adapj
