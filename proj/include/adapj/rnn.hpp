#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "adapj/scaling.hpp"
#include "adapj/types.hpp"

namespace adapj {

/// Minimal Elman-style recurrent inverse-dynamics controller: one tanh
/// recurrent layer unrolled over an n-step window of (state, previous
/// actuation) pairs, linear output head. The desired next state is injected
/// at the final step's state slot. All signals live in [-1, 1].
struct RnnConfig {
  int n = 5;        // recurrence window
  int hidden = 32;  // hidden width
  double lr = 0.05;
  int epochs = 80;
  int batch = 64;
  std::uint64_t seed = 0;
  ScaleMap state_scale;
  ScaleMap act_scale;
  ActuationBounds bounds;

  void validate() const {
    if (n < 1 || hidden < 1) fail(ErrorCategory::Config, "rnn window/hidden must be >= 1");
    if (!(lr > 0) || epochs < 1 || batch < 1)
      fail(ErrorCategory::Config, "rnn training hyperparameters must be positive");
    state_scale.validate();
    act_scale.validate();
  }
};

struct RnnWeights {
  Eigen::MatrixXd w_in;   // H x (d_s + d_a)
  Eigen::MatrixXd w_rec;  // H x H
  Eigen::VectorXd b_h;    // H
  Eigen::MatrixXd w_out;  // d_a x H
  Eigen::VectorXd b_out;  // d_a
  int n = 0;

  Eigen::Index hidden() const { return w_rec.rows(); }
  Eigen::Index input_dim() const { return w_in.cols(); }
  Eigen::Index output_dim() const { return w_out.rows(); }

  void validate() const {
    if (w_in.rows() != hidden() || w_out.cols() != hidden() || b_h.size() != hidden() ||
        b_out.size() != output_dim() || n < 1)
      fail(ErrorCategory::Dimension, "inconsistent RNN weight dimensions");
    if (!all_finite(w_in) || !all_finite(w_rec) || !all_finite(w_out) ||
        !all_finite(b_h) || !all_finite(b_out))
      fail(ErrorCategory::Numeric, "non-finite RNN weights");
  }
};

/// One supervised window: inputs column i is step i's [state; prev actuation]
/// (scaled), target is the actuation to reproduce (scaled).
struct RnnWindow {
  Eigen::MatrixXd inputs;  // (d_s + d_a) x n
  Eigen::VectorXd target;  // d_a
};

/// Builds training windows from babbling data. Window for target a_t stacks
/// step inputs [s_{t-n+2+i}; a_{t-n+i}], i = 0..n-1; the realized s_{t+1}
/// fills the desired-state slot of the last step. Valid targets: t in [n, N-2].
inline std::vector<RnnWindow> build_windows(const BabblingDataset& data, int n,
                                            const ScaleMap& state_scale,
                                            const ScaleMap& act_scale) {
  data.validate();
  if (n < 1) fail(ErrorCategory::Config, "build_windows: n must be >= 1");
  const auto len = static_cast<long>(data.size());
  if (len < n + 2)
    fail(ErrorCategory::Data, "build_windows: dataset too short (need at least n + 2 samples)");
  const Eigen::Index ds = data.state_dim();
  const Eigen::Index da = data.act_dim();
  std::vector<RnnWindow> windows;
  windows.reserve(static_cast<std::size_t>(len - n - 1));
  for (long t = n; t <= len - 2; ++t) {
    RnnWindow w;
    w.inputs.resize(ds + da, n);
    for (int i = 0; i < n; ++i) {
      const long si = t - n + 2 + i;
      const long ai = t - n + i;
      w.inputs.col(i).head(ds) = rescale(data.samples[si].state, state_scale);
      w.inputs.col(i).tail(da) = rescale(data.samples[ai].actuation, act_scale);
    }
    w.target = rescale(data.samples[t].actuation, act_scale);
    windows.push_back(std::move(w));
  }
  return windows;
}

struct RnnGradients {
  Eigen::MatrixXd w_in, w_rec, w_out;
  Eigen::VectorXd b_h, b_out;
};

/// Forward pass over a batch (step inputs as din x B matrices); returns the
/// output d_a x B.
inline Eigen::MatrixXd rnn_forward_batch(const RnnWeights& w,
                                         const std::vector<Eigen::MatrixXd>& steps) {
  const auto b = steps.empty() ? 0 : steps.front().cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(w.hidden(), b);
  for (const Eigen::MatrixXd& x : steps)
    h = ((w.w_in * x + w.w_rec * h).colwise() + w.b_h).array().tanh().matrix();
  return (w.w_out * h).colwise() + w.b_out;
}

/// Mean-over-batch squared-error loss and its gradients by backpropagation
/// through time.
inline double rnn_loss_and_gradients(const RnnWeights& w,
                                     const std::vector<Eigen::MatrixXd>& steps,
                                     const Eigen::MatrixXd& targets, RnnGradients& g) {
  const Eigen::Index b = targets.cols();
  const auto n = static_cast<int>(steps.size());
  std::vector<Eigen::MatrixXd> h(n + 1);
  h[0] = Eigen::MatrixXd::Zero(w.hidden(), b);
  for (int t = 0; t < n; ++t)
    h[t + 1] = ((w.w_in * steps[t] + w.w_rec * h[t]).colwise() + w.b_h).array().tanh().matrix();
  const Eigen::MatrixXd y = (w.w_out * h[n]).colwise() + w.b_out;
  const Eigen::MatrixXd diff = y - targets;
  const double loss = diff.squaredNorm() / static_cast<double>(b);

  const Eigen::MatrixXd dy = (2.0 / static_cast<double>(b)) * diff;
  g.w_out = dy * h[n].transpose();
  g.b_out = dy.rowwise().sum();
  g.w_in = Eigen::MatrixXd::Zero(w.w_in.rows(), w.w_in.cols());
  g.w_rec = Eigen::MatrixXd::Zero(w.w_rec.rows(), w.w_rec.cols());
  g.b_h = Eigen::VectorXd::Zero(w.b_h.size());
  Eigen::MatrixXd dh = w.w_out.transpose() * dy;
  for (int t = n - 1; t >= 0; --t) {
    const Eigen::MatrixXd dz =
        (dh.array() * (1.0 - h[t + 1].array().square())).matrix();
    g.w_in += dz * steps[t].transpose();
    g.w_rec += dz * h[t].transpose();
    g.b_h += dz.rowwise().sum();
    dh = w.w_rec.transpose() * dz;
  }
  return loss;
}

struct TrainingReport {
  std::vector<double> epoch_loss;
};

inline RnnWeights rnn_random_weights(Eigen::Index input_dim, Eigen::Index output_dim,
                                     const RnnConfig& cfg, std::mt19937_64& rng) {
  RnnWeights w;
  const Eigen::Index h = cfg.hidden;
  auto uniform = [&rng](Eigen::Index r, Eigen::Index c, double radius) {
    std::uniform_real_distribution<double> dist(-radius, radius);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
  };
  w.w_in = uniform(h, input_dim, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  w.w_rec = uniform(h, h, 1.0 / std::sqrt(static_cast<double>(h)));
  w.b_h = Eigen::VectorXd::Zero(h);
  w.w_out = uniform(output_dim, h, 1.0 / std::sqrt(static_cast<double>(h)));
  w.b_out = Eigen::VectorXd::Zero(output_dim);
  w.n = cfg.n;
  return w;
}

/// Mini-batch SGD over the windows; deterministic for a fixed seed. Throws a
/// numeric error naming the last stable epoch if the loss diverges.
inline std::pair<RnnWeights, TrainingReport> rnn_train(const std::vector<RnnWindow>& windows,
                                                       const RnnConfig& cfg) {
  cfg.validate();
  if (windows.empty()) fail(ErrorCategory::Data, "rnn_train: no training windows");
  const Eigen::Index din = windows.front().inputs.rows();
  const Eigen::Index dout = windows.front().target.size();
  const int n = static_cast<int>(windows.front().inputs.cols());
  std::mt19937_64 rng(cfg.seed);
  RnnConfig c = cfg;
  c.n = n;
  RnnWeights w = rnn_random_weights(din, dout, c, rng);

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = std::min<std::size_t>(cfg.batch, windows.size());
  std::vector<Eigen::MatrixXd> steps(n);
  TrainingReport report;
  RnnGradients g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < windows.size(); start += batch) {
      const auto b = std::min(batch, windows.size() - start);
      for (int t = 0; t < n; ++t) steps[t].resize(din, static_cast<Eigen::Index>(b));
      Eigen::MatrixXd targets(dout, static_cast<Eigen::Index>(b));
      for (std::size_t i = 0; i < b; ++i) {
        const RnnWindow& win = windows[order[start + i]];
        for (int t = 0; t < n; ++t) steps[t].col(static_cast<Eigen::Index>(i)) = win.inputs.col(t);
        targets.col(static_cast<Eigen::Index>(i)) = win.target;
      }
      const double loss = rnn_loss_and_gradients(w, steps, targets, g);
      if (!std::isfinite(loss))
        fail(ErrorCategory::Numeric, "rnn_train: loss diverged at epoch " +
                                         std::to_string(epoch) + " (last stable epoch " +
                                         std::to_string(epoch - 1) + ")");
      w.w_in -= cfg.lr * g.w_in;
      w.w_rec -= cfg.lr * g.w_rec;
      w.b_h -= cfg.lr * g.b_h;
      w.w_out -= cfg.lr * g.w_out;
      w.b_out -= cfg.lr * g.b_out;
      epoch_loss += loss;
      ++batches;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  w.validate();
  return {w, report};
}

/// Control-time forward pass on one window; output is mapped back from
/// [-1, 1] to actuation units and clamped.
inline ActuationVec rnn_act(const RnnWeights& w, const Eigen::MatrixXd& window_inputs,
                            const ScaleMap& act_scale, const ActuationBounds& bounds,
                            bool* saturated = nullptr) {
  w.validate();
  if (window_inputs.rows() != w.input_dim() || window_inputs.cols() != w.n)
    fail(ErrorCategory::Dimension, "rnn_act: window shape mismatch");
  std::vector<Eigen::MatrixXd> steps;
  steps.reserve(static_cast<std::size_t>(w.n));
  for (int t = 0; t < w.n; ++t) steps.push_back(window_inputs.col(t));
  const Eigen::VectorXd y = rnn_forward_batch(w, steps);
  ActuationVec a = scale_from_unit(y, act_scale);
  const bool sat = bounds.clamp(a);
  if (saturated) *saturated = sat;
  return a;
}

}  // namespace adapj
