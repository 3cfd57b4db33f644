#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "adapj/harness.hpp"
#include "adapj/plant.hpp"

using namespace adapj;

TEST_CASE("tip kinematics limit, symmetry, and reference value") {
  CHECK(tip_x_mm(0.0, 0.2) == 0.0);
  CHECK_THROWS_AS(tip_x_mm(2.0 * std::numbers::pi, 0.2), Error);
  for (double th : {0.1, 0.7, 1.3, 2.5}) CHECK(tip_x_mm(-th, 0.2) == -tip_x_mm(th, 0.2));
  // theta = pi, L = 200 mm: x = 2L/pi
  CHECK(tip_x_mm(std::numbers::pi, 0.2) == Catch::Approx(2.0 * 200.0 / std::numbers::pi).margin(1e-9));
  // continuity at the series switch
  CHECK(tip_x_mm(1e-8, 0.2) == Catch::Approx(tip_x_mm(1.0000001e-8, 0.2)).epsilon(1e-6));
}

TEST_CASE("rest is a fixed point and free response decays") {
  FingerPlantConfig cfg;
  SoftBendingPlant plant(cfg);
  plant.step(ActuationVec::Zero(1));
  CHECK(plant.state().theta[0] == 0.0);
  CHECK(plant.state().theta_dot[0] == 0.0);

  PlantState st;
  st.theta = Eigen::VectorXd::Constant(1, 0.3);
  st.theta_dot = Eigen::VectorXd::Zero(1);
  st.tip = tip_position(st.theta, cfg);
  double prev = 0.3;
  for (int k = 0; k < 50; ++k) {
    st = plant_step(st, ActuationVec::Zero(1), cfg);
    CHECK(std::abs(st.theta[0]) < prev);
    prev = std::abs(st.theta[0]);
  }
}

TEST_CASE("step response settles at the closed-form equilibrium") {
  FingerPlantConfig cfg;
  for (double ratio : {1.0, 2.0}) {
    FingerPlantConfig scaled = apply_property_ratio(cfg, ratio, 1.0);
    SoftBendingPlant plant(scaled);
    const ActuationVec a = ActuationVec::Constant(1, 0.4);
    for (int k = 0; k < 600; ++k) plant.step(a);
    const double expected = scaled.torque_gain * 0.4 / scaled.stiffness_eff();
    CHECK(plant.state().theta[0] == Catch::Approx(expected).margin(1e-6));
  }
}

TEST_CASE("apply_property_ratio scales only the effective values") {
  FingerPlantConfig cfg;
  const FingerPlantConfig scaled = apply_property_ratio(cfg, 2.0, 0.5);
  CHECK(scaled.bending_stiffness == cfg.bending_stiffness);
  CHECK(scaled.damping == cfg.damping);
  CHECK(scaled.stiffness_eff() == 2.0 * cfg.stiffness_eff());
  CHECK(scaled.damping_eff() == 0.5 * cfg.damping_eff());
  CHECK_THROWS_AS(apply_property_ratio(cfg, 0.0, 1.0), Error);
  // Doubling stiffness halves the equilibrium deflection for a fixed input.
  SoftBendingPlant p1(cfg);
  SoftBendingPlant p2(apply_property_ratio(cfg, 2.0, 1.0));
  const ActuationVec a = ActuationVec::Constant(1, 0.5);
  for (int k = 0; k < 800; ++k) {
    p1.step(a);
    p2.step(a);
  }
  CHECK(p2.state().theta[0] == Catch::Approx(0.5 * p1.state().theta[0]).margin(1e-6));
}

namespace {

/// Closed-form solution of I th'' + d th' + k th = u from rest (overdamped).
double linear_ode_theta(double t, double u, const FingerPlantConfig& cfg) {
  const double k = cfg.stiffness_eff();
  const double d = cfg.damping_eff();
  const double I = cfg.inertia;
  const double disc = std::sqrt(d * d - 4.0 * I * k);
  const double r1 = (-d + disc) / (2.0 * I);
  const double r2 = (-d - disc) / (2.0 * I);
  const double th_inf = u / k;
  // th(t) = th_inf + c1 e^{r1 t} + c2 e^{r2 t}, th(0) = 0, th'(0) = 0
  const double c1 = th_inf * r2 / (r1 - r2);
  const double c2 = -th_inf * r1 / (r1 - r2);
  return th_inf + c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t);
}

double settle_time(SoftBendingPlant& plant, double a_level, double band = 0.02) {
  plant.reset();
  const ActuationVec a = ActuationVec::Constant(1, a_level);
  const double target = plant.config().torque_gain * a_level / plant.config().stiffness_eff();
  int settled_at = -1;
  for (int k = 0; k < 2000; ++k) {
    plant.step(a);
    if (std::abs(plant.state().theta[0] - target) < band * std::abs(target)) {
      if (settled_at < 0) settled_at = k;
    } else {
      settled_at = -1;
    }
  }
  return settled_at * plant.config().dt;
}

double overshoot(SoftBendingPlant& plant, double a_level) {
  plant.reset();
  const ActuationVec a = ActuationVec::Constant(1, a_level);
  const double target = plant.config().torque_gain * a_level / plant.config().stiffness_eff();
  double peak = 0.0;
  for (int k = 0; k < 2000; ++k) {
    plant.step(a);
    peak = std::max(peak, plant.state().theta[0] - target);
  }
  return peak;
}

}  // namespace

TEST_CASE("trajectory matches the linear ODE solution") {
  FingerPlantConfig cfg;
  SoftBendingPlant plant(cfg);
  const double a_level = 0.6;
  const ActuationVec a = ActuationVec::Constant(1, a_level);
  for (int k = 1; k <= 100; ++k) {
    plant.step(a);
    const double expected = linear_ode_theta(k * cfg.dt, cfg.torque_gain * a_level, cfg);
    CHECK(plant.state().theta[0] == Catch::Approx(expected).epsilon(0.02));
  }
}

TEST_CASE("higher damping ratio slows settling without adding overshoot") {
  FingerPlantConfig cfg;
  SoftBendingPlant nominal(cfg);
  SoftBendingPlant damped(apply_property_ratio(cfg, 1.0, 2.0));
  CHECK(settle_time(damped, 0.5) > settle_time(nominal, 0.5));
  CHECK(overshoot(damped, 0.5) <= overshoot(nominal, 0.5) + 1e-12);
}

TEST_CASE("free response never gains energy") {
  FingerPlantConfig cfg;
  PlantState st;
  st.theta = Eigen::VectorXd::Constant(1, 1.1);
  st.theta_dot = Eigen::VectorXd::Constant(1, -0.8);
  st.tip = tip_position(st.theta, cfg);
  auto energy = [&cfg](const PlantState& s) {
    return 0.5 * cfg.inertia * s.theta_dot.squaredNorm() +
           0.5 * cfg.stiffness_eff() * s.theta.squaredNorm();
  };
  double e = energy(st);
  for (int k = 0; k < 200; ++k) {
    st = plant_step(st, ActuationVec::Zero(1), cfg);
    const double e2 = energy(st);
    CHECK(e2 <= e + 1e-9);
    e = e2;
  }
}

TEST_CASE("mirrored actuation gives mirrored trajectories") {
  FingerPlantConfig cfg;
  SoftBendingPlant pos(cfg), neg(cfg);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const double a = u(rng);
    pos.step(ActuationVec::Constant(1, a));
    neg.step(ActuationVec::Constant(1, -a));
    CHECK(std::abs(pos.tip()[0] + neg.tip()[0]) <= 1e-9);
  }
}

TEST_CASE("plant stepping is deterministic") {
  FingerPlantConfig cfg;
  cfg.axes = 2;
  SoftBendingPlant p1(cfg), p2(cfg);
  std::mt19937_64 r1(42), r2(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    ActuationVec a1(2), a2(2);
    a1 << u(r1), u(r1);
    a2 << u(r2), u(r2);
    p1.step(a1);
    p2.step(a2);
    REQUIRE(p1.tip() == p2.tip());  // bit-identical
  }
}

TEST_CASE("non-finite state is an integration fault") {
  FingerPlantConfig cfg;
  PlantState st;
  st.theta = Eigen::VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN());
  st.theta_dot = Eigen::VectorXd::Zero(1);
  st.tip = StateVec::Zero(1);
  CHECK_THROWS_AS(plant_step(st, ActuationVec::Zero(1), cfg), Error);
}

TEST_CASE("impulse disturbance is seeded and probability-gated") {
  DisturbanceSpec spec;
  spec.schedule.push_back({0, 1000, ImpulseDisturbance{0.2, 0.3}});
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);

  std::mt19937_64 ra(9), rb(9);
  int hits = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const Eigen::VectorXd ta = inject_disturbance(spec, t, theta, ra);
    const Eigen::VectorXd tb = inject_disturbance(spec, t, theta, rb);
    REQUIRE(ta == tb);  // identical impulse sequence for a fixed seed
    if (ta.cwiseAbs().maxCoeff() > 0) ++hits;
    for (Eigen::Index i = 0; i < 2; ++i)
      CHECK((ta[i] == 0.0 || std::abs(ta[i]) == 0.2));
  }
  CHECK(hits > 300);  // both axes draw at p = 0.3
  CHECK(hits < 700);

  DisturbanceSpec never;
  never.schedule.push_back({0, 1000, ImpulseDisturbance{0.2, 0.0}});
  std::mt19937_64 rc(1);
  for (std::size_t t = 0; t < 200; ++t)
    CHECK(inject_disturbance(never, t, theta, rc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("obstacle torque is one-sided") {
  DisturbanceSpec spec;
  spec.schedule.push_back({0, 100, ObstacleDisturbance{1, 0.3, 0.8}});
  std::mt19937_64 rng(1);
  Eigen::VectorXd theta(2);
  theta << 0.5, 0.1;  // below the contact angle on the obstacle axis
  CHECK(inject_disturbance(spec, 0, theta, rng).cwiseAbs().maxCoeff() == 0.0);
  theta << 0.5, 0.5;  // past the contact angle
  const Eigen::VectorXd tau = inject_disturbance(spec, 0, theta, rng);
  CHECK(tau[0] == 0.0);
  CHECK(tau[1] == Catch::Approx(-0.8 * 0.2).margin(1e-12));
}

TEST_CASE("babbling workspace covers the rated span") {
  FingerPlantConfig cfg;
  SoftBendingPlant plant(cfg);
  const BabblingDataset data = run_babbling(plant, 5000, 123);
  double max_tip = 0.0;
  for (const Sample& s : data.samples) max_tip = std::max(max_tip, std::abs(s.state[0]));
  CHECK(max_tip > 131.9 * 0.85);
  CHECK(max_tip < 131.9 * 1.15);
}
