#include "obsyn/obsgram.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "obsyn/linalg.hpp"

namespace obsyn {
namespace {

const Eigen::Matrix2d kI = Eigen::Matrix2d::Identity();

TrajectoryBundle holonomic_lqr_bundle(const Eigen::Vector2d& x0, double tf, double eps,
                                      int steps = 200) {
  const LinearSystem sys(Eigen::Matrix2d::Zero(), kI);
  const Controller lqr = Controller::lqr(kI, kI, kI);
  return simulate_bundle(sys, lqr, x0, eps, SimGrid::with_steps(tf, steps));
}

TEST(EmpiricalGramian, StaticIdentityObservationIsIdentity) {
  // A = 0, u = 0: members sit still, output differences stay 2*eps*e_i.
  const LinearSystem sys(Eigen::Matrix2d::Zero(), kI);
  const Controller no_control = Controller::lqr(Eigen::Matrix2d::Zero(), kI, kI);
  for (double eps : {1e-3, 1e-2, 0.5}) {
    const TrajectoryBundle b =
        simulate_bundle(sys, no_control, Eigen::Vector2d(1, -2), eps, SimGrid(1.0, 0.01));
    const ObservabilityReport rep = empirical_gramian(b, ObservationModel::linear(kI));
    EXPECT_LT((rep.W - kI).norm(), 1e-12);
    EXPECT_EQ(rep.numerical_rank, 2);
  }
}

TEST(EmpiricalGramian, LqrBearingIsRankOne) {
  const TrajectoryBundle b = holonomic_lqr_bundle({4, 4}, 8.0 / 0.9, 0.0566);
  const ObservabilityReport rep = empirical_gramian(b, ObservationModel::bearing_ratio());
  EXPECT_EQ(rep.numerical_rank, 1);
  EXPECT_NEAR(rep.min_eigenvalue, 0.0, 1e-12);
  EXPECT_GT(rep.trace, 0.0);
}

TEST(EmpiricalGramian, MatchesLinearGramianForLinearObservation) {
  // Linear output on a linear closed loop: Eq-level agreement with the
  // analytic Gramian of (Abar, C), and epsilon independence.
  Eigen::Matrix2d A;
  A << 0, 1, 0, 0;
  const RiccatiSolution care = solve_care(A, kI, kI, kI);
  const Eigen::Matrix2d Abar = A - care.P;
  const LinearSystem sys(A, kI);
  const Controller lqr = Controller::lqr(care.P, kI, kI);
  Eigen::MatrixXd C(2, 2);
  C << 1, 0.5, 0, 2;
  const ObservationModel h = ObservationModel::linear(C);

  const double tf = 2.0;
  const int steps = 200;
  const Eigen::MatrixXd W_lin = linear_obs_gramian(Abar, C, tf, steps);

  Eigen::MatrixXd W_prev;
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    const TrajectoryBundle b =
        simulate_bundle(sys, lqr, Eigen::Vector2d(1, -0.5), eps, SimGrid::with_steps(tf, steps));
    const ObservabilityReport rep = empirical_gramian(b, h);
    EXPECT_LT((rep.W - W_lin).cwiseAbs().maxCoeff(), 1e-6);
    if (W_prev.size() > 0) EXPECT_LT((rep.W - W_prev).cwiseAbs().maxCoeff(), 1e-9);
    W_prev = rep.W;
  }
}

TEST(EmpiricalGramian, OutputIsPsdAndTraceConsistent) {
  const TrajectoryBundle b = holonomic_lqr_bundle({4, 2}, 2.0, 0.04);
  const ObservationModel h = ObservationModel::bearing_ratio();
  const ObservabilityReport rep = empirical_gramian(b, h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.W);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_NEAR(rep.trace, trace_gramian(b, h), 1e-9);
}

TEST(EmpiricalGramian, DomainViolationCarriesContext) {
  // Member minus[0] starts on the x1 = 0 line where the bearing is undefined.
  const TrajectoryBundle b = holonomic_lqr_bundle({0.05, 3}, 1.0, 0.05);
  try {
    empirical_gramian(b, ObservationModel::bearing_ratio());
    FAIL() << "expected DomainViolation";
  } catch (const DomainViolation& e) {
    EXPECT_EQ(e.member, -1);
    EXPECT_EQ(e.t, 0.0);
  }
}

TEST(TraceGramian, StaticIdentityEqualsStateDimension) {
  const LinearSystem sys(Eigen::Matrix2d::Zero(), kI);
  const Controller no_control = Controller::lqr(Eigen::Matrix2d::Zero(), kI, kI);
  const TrajectoryBundle b =
      simulate_bundle(sys, no_control, Eigen::Vector2d(1, 1), 0.1, SimGrid(1.0, 0.01));
  EXPECT_NEAR(trace_gramian(b, ObservationModel::linear(kI)), 2.0, 1e-12);
}

TEST(TraceGramian, DegenerateBundleWithEqualMembersIsZero) {
  const SimGrid grid(1.0, 0.1);
  const Trajectory still =
      integrate([](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
                Eigen::Vector2d(1, 2), grid);
  TrajectoryBundle b;
  b.nominal = still;
  b.plus = {still, still};
  b.minus = {still, still};
  b.epsilon = 1e-3;
  EXPECT_EQ(trace_gramian(b, ObservationModel::bearing_ratio()), 0.0);
}

TEST(TraceGramian, TimeConstantIntegrandClosedForm) {
  // LQR bearing case: differences are frozen at their t = 0 values.
  const double tf = 1.0, eps = 0.0566;
  const Eigen::Vector2d x0(4, 4);
  const TrajectoryBundle b = holonomic_lqr_bundle(x0, tf, eps);
  const ObservationModel h = ObservationModel::bearing_ratio();
  double sum0 = 0.0;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e(i) = eps;
    sum0 += (h(x0 + e) - h(x0 - e)).squaredNorm();
  }
  EXPECT_NEAR(trace_gramian(b, h), tf * sum0 / (4 * eps * eps), 1e-10);
}

TEST(TraceGramian, HorizonMonotonicity) {
  const double eps = 0.05;
  const ObservationModel h = ObservationModel::bearing_ratio();
  const double t1 = trace_gramian(holonomic_lqr_bundle({4, 2}, 1.0, eps, 100), h);
  const double t2 = trace_gramian(holonomic_lqr_bundle({4, 2}, 2.0, eps, 200), h);
  EXPECT_GE(t2, t1);
}

TEST(L2At, UnitDiscountIntegralEqualsTrace) {
  const TrajectoryBundle b = holonomic_lqr_bundle({4, 2}, 2.0, 0.05);
  const ObservationModel h = ObservationModel::bearing_ratio();
  const CostWeights w{1.0, 0.0};  // alpha = 0
  double integral = 0.0;
  const int steps = b.grid().step_count();
  for (int k = 0; k <= steps; ++k) {
    const double wq = (k == 0 || k == steps) ? 0.5 : 1.0;
    integral += wq * b.grid().dt() * l2_at(k, b, h, w);
  }
  EXPECT_NEAR(integral, trace_gramian(b, h), 1e-9);
}

TEST(L2At, DiscountFactorsOutOfFrozenDifferences) {
  const TrajectoryBundle b = holonomic_lqr_bundle({4, 4}, 2.0, 0.05);
  const ObservationModel h = ObservationModel::bearing_ratio();
  const CostWeights w{1.0, 0.7};
  const double l2_0 = l2_at(0, b, h, w);
  for (int k : {10, 50, 150}) {
    EXPECT_NEAR(l2_at(k, b, h, w) / l2_0, std::exp(-w.alpha * b.grid().time(k)), 1e-12);
  }
}

TEST(L1At, Examples) {
  EXPECT_EQ(l1_at(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), kI, kI), 0.0);
  EXPECT_NEAR(l1_at(Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, -1), kI, kI), 4.0, 1e-15);
  const Eigen::MatrixXd Q2 = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd x(1), u(1);
  x << 3;
  u << 0;
  EXPECT_NEAR(l1_at(x, u, Q2, Eigen::MatrixXd::Identity(1, 1)), 18.0, 1e-15);
}

}  // namespace
}  // namespace obsyn
