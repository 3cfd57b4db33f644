#include <catch_amalgamated.hpp>

#include <random>

#include "adapj/rnn.hpp"

using namespace adapj;

namespace {

BabblingDataset toy_dataset(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  BabblingDataset data;
  data.dt = 0.1;
  double s = 0.0;
  double a_prev = 0.0;
  for (int t = 0; t < n; ++t) {
    const double a = u(rng);
    data.samples.push_back({t, StateVec::Constant(1, s), ActuationVec::Constant(1, a)});
    s = 0.8 * s + 0.15 * a + 0.02 * a_prev;  // mild lag
    a_prev = a;
  }
  return data;
}

RnnConfig toy_config() {
  RnnConfig cfg;
  cfg.state_scale = ScaleMap::symmetric(1, 1.0);
  cfg.act_scale = ScaleMap::symmetric(1, 1.0);
  cfg.bounds = ActuationBounds{-1.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("window counting") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  // Exactly one window at the minimum length.
  for (int n : {1, 2, 5}) {
    const BabblingDataset d = toy_dataset(n + 2, 1);
    CHECK(build_windows(d, n, unit, unit).size() == 1);
  }
  const BabblingDataset d100 = toy_dataset(100, 2);
  CHECK(build_windows(d100, 5, unit, unit).size() == 94);
  CHECK_THROWS_AS(build_windows(toy_dataset(6, 3), 5, unit, unit), Error);
}

TEST_CASE("windows are ordered with disjoint targets") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(30, 4);
  const auto windows = build_windows(d, 3, unit, unit);
  REQUIRE(windows.size() == 26);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    // Target i corresponds to sample t = n + i, scaled by the identity span.
    CHECK(windows[i].target[0] == Catch::Approx(d.samples[3 + i].actuation[0]).margin(1e-15));
    // Last step's state slot carries the realized next state.
    CHECK(windows[i].inputs(0, 2) ==
          Catch::Approx(d.samples[3 + i + 1].state[0]).margin(1e-15));
  }
}

TEST_CASE("zero weights output the bias") {
  RnnWeights w;
  w.w_in = Eigen::MatrixXd::Zero(4, 2);
  w.w_rec = Eigen::MatrixXd::Zero(4, 4);
  w.b_h = Eigen::VectorXd::Zero(4);
  w.w_out = Eigen::MatrixXd::Zero(1, 4);
  w.b_out = Eigen::VectorXd::Constant(1, 0.25);
  w.n = 3;
  const ScaleMap act = ScaleMap::symmetric(1, 2.0);  // bias 0.25 -> 0.5 in units
  const ActuationVec a =
      rnn_act(w, Eigen::MatrixXd::Zero(2, 3), act, ActuationBounds{-2.0, 2.0});
  CHECK(a[0] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("forward pass is pure") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(40, 6);
  const auto windows = build_windows(d, 4, unit, unit);
  RnnConfig cfg = toy_config();
  cfg.n = 4;
  cfg.hidden = 8;
  cfg.epochs = 5;
  const auto [w, rep] = rnn_train(windows, cfg);
  const ActuationVec a1 = rnn_act(w, windows[0].inputs, cfg.act_scale, cfg.bounds);
  const ActuationVec a2 = rnn_act(w, windows[0].inputs, cfg.act_scale, cfg.bounds);
  CHECK(a1 == a2);
}

TEST_CASE("training reduces the loss") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BabblingDataset d = toy_dataset(200, 100 + seed);
    const auto windows = build_windows(d, 5, unit, unit);
    RnnConfig cfg = toy_config();
    cfg.seed = seed;
    cfg.epochs = 200;
    cfg.hidden = 16;
    const auto [w, rep] = rnn_train(windows, cfg);
    if (rep.epoch_loss.back() < rep.epoch_loss.front()) ++successes;
  }
  CHECK(successes == 5);
}

TEST_CASE("a single repeated window is memorized") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(10, 7);
  auto windows = build_windows(d, 2, unit, unit);
  windows.resize(1);
  RnnConfig cfg = toy_config();
  cfg.n = 2;
  cfg.hidden = 8;
  cfg.epochs = 3000;
  cfg.lr = 0.2;
  const auto [w, rep] = rnn_train(windows, cfg);
  CHECK(rep.epoch_loss.back() < 1e-6);
}

TEST_CASE("training is deterministic per seed") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(80, 8);
  const auto windows = build_windows(d, 3, unit, unit);
  RnnConfig cfg = toy_config();
  cfg.n = 3;
  cfg.hidden = 8;
  cfg.epochs = 10;
  cfg.seed = 99;
  const auto [w1, r1] = rnn_train(windows, cfg);
  const auto [w2, r2] = rnn_train(windows, cfg);
  CHECK(w1.w_in == w2.w_in);
  CHECK(w1.w_rec == w2.w_rec);
  CHECK(w1.w_out == w2.w_out);
  CHECK(r1.epoch_loss == r2.epoch_loss);
}

TEST_CASE("BPTT gradients match central finite differences") {
  std::mt19937_64 seed_rng(0);
  for (int trial = 0; trial < 20; ++trial) {
    std::mt19937_64 rng(seed_rng());
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    RnnConfig cfg = toy_config();
    cfg.n = 2;
    cfg.hidden = 3;
    RnnWeights w = rnn_random_weights(2, 1, cfg, rng);
    std::vector<Eigen::MatrixXd> steps(2);
    for (auto& x : steps) {
      x.resize(2, 1);
      x << u(rng), u(rng);
    }
    Eigen::MatrixXd target(1, 1);
    target << u(rng);

    RnnGradients g;
    rnn_loss_and_gradients(w, steps, target, g);

    auto loss_at = [&](RnnWeights probe) {
      RnnGradients scratch;
      return rnn_loss_and_gradients(probe, steps, target, scratch);
    };
    const double h = 1e-6;
    auto check_block = [&](Eigen::MatrixXd RnnWeights::* block, const Eigen::MatrixXd& grad) {
      for (Eigen::Index i = 0; i < grad.rows(); ++i)
        for (Eigen::Index j = 0; j < grad.cols(); ++j) {
          RnnWeights wp = w, wm = w;
          (wp.*block)(i, j) += h;
          (wm.*block)(i, j) -= h;
          const double fd = (loss_at(wp) - loss_at(wm)) / (2.0 * h);
          const double scale = std::max({1e-4, std::abs(fd), std::abs(grad(i, j))});
          CHECK(std::abs(fd - grad(i, j)) / scale < 1e-4);
        }
    };
    check_block(&RnnWeights::w_in, g.w_in);
    check_block(&RnnWeights::w_rec, g.w_rec);
    check_block(&RnnWeights::w_out, g.w_out);
    auto check_vec = [&](Eigen::VectorXd RnnWeights::* block, const Eigen::VectorXd& grad) {
      for (Eigen::Index i = 0; i < grad.size(); ++i) {
        RnnWeights wp = w, wm = w;
        (wp.*block)(i) += h;
        (wm.*block)(i) -= h;
        const double fd = (loss_at(wp) - loss_at(wm)) / (2.0 * h);
        const double scale = std::max({1e-4, std::abs(fd), std::abs(grad(i))});
        CHECK(std::abs(fd - grad(i)) / scale < 1e-4);
      }
    };
    check_vec(&RnnWeights::b_h, g.b_h);
    check_vec(&RnnWeights::b_out, g.b_out);
  }
}

TEST_CASE("diverging training reports the last stable epoch") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(120, 12);
  const auto windows = build_windows(d, 3, unit, unit);
  RnnConfig cfg = toy_config();
  cfg.n = 3;
  cfg.hidden = 16;
  cfg.epochs = 400;
  cfg.lr = 60.0;  // guaranteed blow-up
  try {
    rnn_train(windows, cfg);
    FAIL("expected divergence error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Numeric);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("trained head responds to the desired state") {
  const ScaleMap unit = ScaleMap::symmetric(1, 1.0);
  const BabblingDataset d = toy_dataset(300, 9);
  const auto windows = build_windows(d, 3, unit, unit);
  RnnConfig cfg = toy_config();
  cfg.n = 3;
  cfg.hidden = 16;
  cfg.epochs = 60;
  const auto [w, rep] = rnn_train(windows, cfg);
  Eigen::MatrixXd inputs = windows[5].inputs;
  const ActuationVec base = rnn_act(w, inputs, cfg.act_scale, cfg.bounds);
  inputs(0, 2) += 0.2;  // perturb only the desired-state slot
  const ActuationVec shifted = rnn_act(w, inputs, cfg.act_scale, cfg.bounds);
  CHECK(std::abs(shifted[0] - base[0]) > 1e-6);
}
