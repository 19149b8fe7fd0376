#include "obsyn/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace obsyn {
namespace {

AugmentedGains demo_gains(double k1, double k2, double k3, double k4) {
  return AugmentedGains::constant(2, k1, k2, k3, k4);
}

TEST(SMatrix, VanishesAtOrigin) {
  const Eigen::VectorXd s = s_matrix(demo_gains(1, 1, 1, 0.3), Eigen::Vector2d::Zero());
  EXPECT_EQ(s.norm(), 0.0);
}

TEST(SMatrix, VanishesWhenK1IsZero) {
  const Eigen::VectorXd s = s_matrix(demo_gains(0, 1, 2, 0.3), Eigen::Vector2d(3, -4));
  EXPECT_EQ(s.norm(), 0.0);
}

TEST(SMatrix, ScalarEvaluation) {
  // ||x|| = pi/2, unit gains, zero phase: S11 = exp(-2/pi) * sin^2(pi/2).
  Eigen::Vector2d x(M_PI_2, 0.0);
  const Eigen::VectorXd s = s_matrix(demo_gains(1, 1, 1, 0), x);
  EXPECT_NEAR(s(0), std::exp(-2.0 / M_PI), 1e-15);
  EXPECT_NEAR(s(0), 0.5289, 2.5e-4);
  EXPECT_EQ(s(0), s(1));
}

TEST(SMatrix, BoundedByK1AndNonnegative) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    AugmentedGains g = demo_gains(uni(rng), 0.1 + uni(rng), uni(rng), 0.0);
    g.k4 << 1.5 * uni(rng) / 3.0, 1.5 * uni(rng) / 3.0;
    Eigen::Vector2d x(uni(rng) - 1.5, uni(rng) - 1.5);
    const Eigen::VectorXd s = s_matrix(g, x);
    for (int i = 0; i < 2; ++i) {
      EXPECT_GE(s(i), 0.0);
      EXPECT_LE(s(i), g.k1(i) + 1e-15);
    }
  }
}

TEST(SMatrixDerivatives, FlatAtOrigin) {
  const SDerivatives d = s_matrix_derivatives(demo_gains(1, 1, 1, 0.2), Eigen::Vector2d::Zero());
  EXPECT_EQ(d.s.norm(), 0.0);
  EXPECT_EQ(d.ds_dr.norm(), 0.0);
  EXPECT_EQ(d.ds_dk.norm(), 0.0);
}

TEST(SMatrixDerivatives, TinyStateUnderflowsCleanly) {
  const SDerivatives d =
      s_matrix_derivatives(demo_gains(1, 1, 1, 0.2), Eigen::Vector2d(1e-200, 0));
  EXPECT_TRUE(d.s.allFinite());
  EXPECT_TRUE(d.ds_dr.allFinite());
  EXPECT_EQ(d.s.norm(), 0.0);
}

TEST(SMatrixDerivatives, MatchFiniteDifferences) {
  AugmentedGains g;
  g.k1 = Eigen::Vector2d(1.0, 1.3);
  g.k2 = Eigen::Vector2d(1.0, 0.8);
  g.k3 = Eigen::Vector2d(1.0, 1.1);
  g.k4 = Eigen::Vector2d(0.1, 0.7);
  const Eigen::Vector2d x(3.0, -2.0);
  const double r = x.norm();
  const double h = 1e-7;

  const SDerivatives d = s_matrix_derivatives(g, x);
  // radial derivative
  Eigen::Vector2d xp = x * (r + h) / r, xm = x * (r - h) / r;
  const Eigen::VectorXd fd_r = (s_matrix(g, xp) - s_matrix(g, xm)) / (2 * h);
  EXPECT_LT((d.ds_dr - fd_r).norm(), 1e-6);

  // gain derivatives
  Eigen::VectorXd* ks[] = {&g.k1, &g.k2, &g.k3, &g.k4};
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 2; ++i) {
      (*ks[j])(i) += h;
      const Eigen::VectorXd sp = s_matrix(g, x);
      (*ks[j])(i) -= 2 * h;
      const Eigen::VectorXd sm = s_matrix(g, x);
      (*ks[j])(i) += h;
      EXPECT_NEAR(d.ds_dk(i, j), (sp(i) - sm(i)) / (2 * h), 1e-6);
    }
  }
}

TEST(GainValidation, RejectsBadRanges) {
  EXPECT_THROW(demo_gains(-0.1, 1, 1, 0).validate(), std::invalid_argument);
  EXPECT_THROW(demo_gains(1, 0, 1, 0).validate(), std::invalid_argument);
  EXPECT_THROW(demo_gains(1, 1, 1, M_PI_2).validate(), std::invalid_argument);
  EXPECT_NO_THROW(demo_gains(0, 1, -2, 0).validate());  // k3 unconstrained
}

TEST(Control, HolonomicLqrIsNegativeIdentity) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Controller lqr = Controller::lqr(I, I, I);
  const Eigen::Vector2d u = lqr(Eigen::Vector2d(4, 4));
  EXPECT_LT((u - Eigen::Vector2d(-4, -4)).norm(), 1e-15);
}

TEST(Control, AugmentedWithZeroK1EqualsLqr) {
  std::mt19937 rng(23);
  std::normal_distribution<double> gauss;
  Eigen::Matrix2d P;
  P << 2, 0.3, 0.3, 1;
  Eigen::Matrix2d R;
  R << 1.5, 0.2, 0.2, 0.8;
  const Eigen::Matrix2d B = Eigen::Matrix2d::Identity();
  const Controller lqr = Controller::lqr(P, R, B);
  const Controller aug = Controller::augmented(P, R, B, demo_gains(0, 1, 1, 0.2));
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector2d x(gauss(rng), gauss(rng));
    EXPECT_EQ((lqr(x) - aug(x)).norm(), 0.0);
  }
}

TEST(Control, AugmentedScalesByOnePlusS) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Controller aug = Controller::augmented(I, I, I, demo_gains(1, 1, 1, 0));
  Eigen::Vector2d x(M_PI_2, 0.0);
  const double s = std::exp(-2.0 / M_PI);
  EXPECT_LT((aug(x) + (1.0 + s) * x).norm(), 1e-14);
}

TEST(Control, ContinuousAtOrigin) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Controller aug = Controller::augmented(I, I, I, demo_gains(2, 1, 3, 0.4));
  EXPECT_EQ(aug(Eigen::Vector2d::Zero()).norm(), 0.0);
  for (double r = 1e-3; r > 1e-9; r *= 0.1) {
    const Eigen::Vector2d x(r, r);
    EXPECT_LE(aug(x).norm(), 3.0 * x.norm() + 1e-12);
  }
}

TEST(LyapunovRateFn, OriginAndUnitExamples) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::VectorXd s0 = Eigen::VectorXd::Zero(2);
  const LyapunovRate at0 = lyapunov_rate(I, I, I, I, s0, Eigen::Vector2d::Zero());
  EXPECT_EQ(at0.V, 0.0);
  EXPECT_EQ(at0.Vdot, 0.0);

  const LyapunovRate r1 = lyapunov_rate(I, I, I, I, s0, Eigen::Vector2d(1, 0));
  EXPECT_NEAR(r1.V, 1.0, 1e-15);
  EXPECT_NEAR(r1.Vdot, -2.0, 1e-15);

  const Eigen::VectorXd shalf = Eigen::VectorXd::Constant(2, 0.5);
  const LyapunovRate r2 = lyapunov_rate(I, I, I, I, shalf, Eigen::Vector2d(1, 0));
  EXPECT_NEAR(r2.V, 1.0, 1e-15);
  EXPECT_NEAR(r2.Vdot, -3.0, 1e-15);
}

TEST(LyapunovRateFn, DissipationNeverBeatsQ) {
  // Vdot <= -x'Qx for all x: the S term only subtracts.
  std::mt19937 rng(31);
  std::normal_distribution<double> gauss;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector2d x(gauss(rng), gauss(rng));
    Eigen::VectorXd s(2);
    s << std::abs(gauss(rng)), std::abs(gauss(rng));
    const LyapunovRate r = lyapunov_rate(I, I, I, I, s, x);
    EXPECT_LE(r.Vdot, -x.squaredNorm() + 1e-12);
  }
}

TEST(ObservationCatalog, BearingRatio) {
  const ObservationModel h = ObservationModel::bearing_ratio();
  const Eigen::Vector2d x(2, 1);
  EXPECT_NEAR(h(x)(0), 0.5, 1e-15);
  const Eigen::MatrixXd J = h.jacobian(x);
  EXPECT_NEAR(J(0, 0), -0.25, 1e-15);
  EXPECT_NEAR(J(0, 1), 0.5, 1e-15);
  EXPECT_FALSE(h.in_domain(Eigen::Vector2d(0, 1)));
  EXPECT_THROW(h.jacobian(Eigen::Vector2d(0, 1)), DomainViolation);
}

TEST(ObservationCatalog, RelativeBearing) {
  const ObservationModel h = ObservationModel::relative_bearing(3);
  Eigen::Vector3d x(2, 4, -6);
  const Eigen::VectorXd y = h(x);
  EXPECT_NEAR(y(0), 2.0, 1e-15);
  EXPECT_NEAR(y(1), -3.0, 1e-15);
  const Eigen::MatrixXd J = h.jacobian(x);
  EXPECT_NEAR(J(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(J(1, 2), 0.5, 1e-15);
}

TEST(ObservationCatalog, LinearMap) {
  Eigen::MatrixXd C(2, 3);
  C << 1, 0, 2, 0, -1, 1;
  const ObservationModel h = ObservationModel::linear(C);
  Eigen::Vector3d x(1, 2, 3);
  EXPECT_LT((h(x) - C * x).norm(), 1e-15);
  EXPECT_LT((h.jacobian(x) - C).norm(), 1e-15);
  EXPECT_TRUE(h.in_domain(Eigen::Vector3d::Zero()));
}

TEST(ObservationModel, FiniteDifferenceJacobianFallback) {
  // No analytic Jacobian: central differences against the bearing formula.
  auto eval = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(1);
    y(0) = x(1) / x(0);
    return y;
  };
  const ObservationModel h("fd_bearing", 1, eval, nullptr, [](const Eigen::VectorXd& x) {
    return std::abs(x(0)) > 1e-9 * std::max(1.0, x.norm());
  });
  const ObservationModel exact = ObservationModel::bearing_ratio();
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> uni(1.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector2d x(uni(rng), uni(rng) - 2.5);
    EXPECT_LT((h.jacobian(x) - exact.jacobian(x)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

}  // namespace
}  // namespace obsyn
