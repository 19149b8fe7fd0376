#include "obsyn/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "obsyn/linalg.hpp"

namespace obsyn {
namespace {

TEST(SimGridBasics, SnapsToMultipleOfDt) {
  const SimGrid g(1.0, 0.3);  // 1.0/0.3 -> 3 steps, tf = 0.9
  EXPECT_EQ(g.step_count(), 3);
  EXPECT_DOUBLE_EQ(g.tf(), 0.9);
  EXPECT_DOUBLE_EQ(g.time(2), 0.6);
  EXPECT_THROW(SimGrid(-1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(SimGrid(1.0, 0.0), std::invalid_argument);
}

TEST(Integrate, ZeroFieldIsConstant) {
  const SimGrid grid(1.0, 0.1);
  const Eigen::Vector2d x0(1, 2);
  const Trajectory t =
      integrate([](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }, x0, grid);
  for (int k = 0; k <= grid.step_count(); ++k) EXPECT_EQ((t.state_at(k) - x0).norm(), 0.0);
}

TEST(Integrate, ExponentialDecayMatchesClosedForm) {
  const SimGrid grid(1.0, 0.01);
  const Trajectory t =
      integrate([](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); },
                Eigen::Vector2d(4, 4), grid);
  const double expect = 4.0 * std::exp(-1.0);
  EXPECT_NEAR(t.state_at(grid.step_count())(0), expect, 1e-6);
  EXPECT_NEAR(t.state_at(grid.step_count())(1), expect, 1e-6);
}

TEST(Integrate, FourthOrderConvergence) {
  auto end_error = [](double dt) {
    const SimGrid grid(1.0, dt);
    const Trajectory t = integrate(
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); }, Eigen::VectorXd::Ones(1),
        grid);
    return std::abs(t.state_at(grid.step_count())(0) - std::exp(-1.0));
  };
  EXPECT_GE(end_error(0.1) / end_error(0.05), 14.0);
}

TEST(Integrate, ReportsNonFiniteState) {
  const SimGrid grid(2.0, 0.1);
  // Finite-time blowup: xdot = x^2 from x0 = 1 escapes at t = 1.
  auto field = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array().square()); };
  EXPECT_THROW(integrate(field, Eigen::VectorXd::Ones(1), grid), NonFiniteState);
}

TEST(SimulateClosedLoop, RecordsControls) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const LinearSystem sys(Eigen::Matrix2d::Zero(), I);
  const Controller lqr = Controller::lqr(I, I, I);
  const SimGrid grid(1.0, 0.01);
  const Trajectory t = simulate_closed_loop(sys, lqr, Eigen::Vector2d(4, 4), grid);
  ASSERT_EQ(t.controls.rows(), grid.step_count() + 1);
  for (int k = 0; k <= grid.step_count(); ++k)
    EXPECT_EQ((t.control_at(k) + t.state_at(k)).norm(), 0.0);
}

TEST(SimulateBundle, CountsAndInitialConditions) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const LinearSystem sys(Eigen::Matrix2d::Zero(), I);
  const Controller lqr = Controller::lqr(I, I, I);
  const SimGrid grid(1.0, 0.05);
  const Eigen::Vector2d x0(4, 4);
  const double eps = 0.01;
  const TrajectoryBundle b = simulate_bundle(sys, lqr, x0, eps, grid);
  ASSERT_EQ(b.plus.size(), 2u);
  ASSERT_EQ(b.minus.size(), 2u);  // 2n + 1 = 5 trajectories in total
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e(i) = eps;
    EXPECT_EQ((b.plus[i].state_at(0) - (x0 + e)).norm(), 0.0);
    EXPECT_EQ((b.minus[i].state_at(0) - (x0 - e)).norm(), 0.0);
  }
  EXPECT_THROW(simulate_bundle(sys, lqr, x0, 0.0, grid), InvalidEpsilon);
}

TEST(SimulateBundle, Determinism) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const LinearSystem sys(Eigen::Matrix2d::Zero(), I);
  AugmentedGains g = AugmentedGains::constant(2, 1.0, 1.0, 1.0, 0.1);
  g.k4(1) = 0.7;
  const Controller aug = Controller::augmented(I, I, I, g);
  const SimGrid grid(2.0, 0.01);
  const TrajectoryBundle b1 = simulate_bundle(sys, aug, Eigen::Vector2d(4, 4), 0.05, grid);
  const TrajectoryBundle b2 = simulate_bundle(sys, aug, Eigen::Vector2d(4, 4), 0.05, grid);
  EXPECT_EQ((b1.nominal.states - b2.nominal.states).norm(), 0.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ((b1.plus[i].states - b2.plus[i].states).norm(), 0.0);
    EXPECT_EQ((b1.minus[i].states - b2.minus[i].states).norm(), 0.0);
  }
}

TEST(SimulateClosedLoop, LinearLoopMatchesMatrixExponential) {
  // k1 = 0 reduces to the linear loop xdot = (A - BR^-1B'P) x.
  Eigen::Matrix2d A;
  A << 0, 1, 0, 0;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const RiccatiSolution care = solve_care(A, I, I, I);
  const LinearSystem sys(A, I);
  const Controller lqr = Controller::lqr(care.P, I, I);
  const Eigen::Matrix2d Abar = A - care.P;  // B = R = I

  const double tf = 2.0;
  const SimGrid grid(tf, 0.01);
  const Eigen::Vector2d x0(1.0, -0.5);
  const Trajectory t = simulate_closed_loop(sys, lqr, x0, grid);
  const Eigen::Vector2d expect = matrix_exponential(Abar, tf) * x0;
  EXPECT_LT((t.state_at(grid.step_count()) - expect).norm(), 1e-6 * std::max(1.0, expect.norm()));
}

TEST(SimulateBundle, LinearLoopBundleSymmetry) {
  // (plus[i] + minus[i])/2 = nominal for linear closed loops.
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const LinearSystem sys(Eigen::Matrix2d::Zero(), I);
  const Controller lqr = Controller::lqr(I, I, I);
  const SimGrid grid(1.0, 0.02);
  const TrajectoryBundle b = simulate_bundle(sys, lqr, Eigen::Vector2d(4, 4), 0.05, grid);
  for (int i = 0; i < 2; ++i) {
    const Eigen::MatrixXd mid = 0.5 * (b.plus[i].states + b.minus[i].states);
    EXPECT_LT((mid - b.nominal.states).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SimulateClosedLoop, LyapunovMonotoneUnderAugmentedFeedback) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const LinearSystem sys(Eigen::Matrix2d::Zero(), I);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const SimGrid grid(8.0 / 0.9, 0.005 * 8.0 / 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    AugmentedGains g;
    g.k1 = Eigen::Vector2d(2 * uni(rng), 2 * uni(rng));
    g.k2 = Eigen::Vector2d(0.2 + 2 * uni(rng), 0.2 + 2 * uni(rng));
    g.k3 = Eigen::Vector2d(0.2 + 2 * uni(rng), 0.2 + 2 * uni(rng));
    g.k4 = Eigen::Vector2d(1.5 * uni(rng), 1.5 * uni(rng));
    const Controller aug = Controller::augmented(I, I, I, g);
    const Trajectory t = simulate_closed_loop(sys, aug, Eigen::Vector2d(4, -4), grid);
    double prev = t.state_at(0).squaredNorm();
    for (int k = 1; k <= grid.step_count(); ++k) {
      const double V = t.state_at(k).squaredNorm();
      EXPECT_LE(V, prev * (1.0 + 1e-14));
      prev = V;
    }
  }
}

}  // namespace
}  // namespace obsyn
