#include "obsyn/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <vector>

namespace obsyn {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

int svd_rank(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  // Relative cutoff n * sigma_max * 1e-12 with n the state dimension.
  const double thresh = static_cast<double>(M.rows()) * sv(0) * 1e-12;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return rank;
}

double spectral_norm(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::LLT<Eigen::MatrixXd>& lltR,
                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtP = B.transpose() * P;
  return (Q + A.transpose() * P + P * A - BtP.transpose() * lltR.solve(BtP)).norm();
}

// PBH test: every eigenvalue with Re >= 0 must leave [lambda*I - A, B] full
// row rank.
bool is_stabilizable(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int i = 0; i < n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) =
        es.eigenvalues()(i) * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(pencil);
    if (qr.rank() < n) return false;
  }
  return true;
}

}  // namespace

bool is_symmetric_positive_definite(const Eigen::Ref<const Eigen::MatrixXd>& M, double tol) {
  if (M.rows() != M.cols()) return false;
  if (!M.allFinite()) return false;
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& A,
                               const Eigen::Ref<const Eigen::MatrixXd>& Q) {
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // vec(A'X + XA) = (I (x) A' + A' (x) I) vec(X) for column-major vec.
  Eigen::MatrixXd coeff = kron(I, A.transpose()) + kron(A.transpose(), I);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(Q.data(), Q.size());
  Eigen::VectorXd vecX = coeff.fullPivLu().solve(-rhs);
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(vecX.data(), n, n);
  return 0.5 * (X + X.transpose());
}

RiccatiSolution solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::Ref<const Eigen::MatrixXd>& Q,
                           const Eigen::Ref<const Eigen::MatrixXd>& R) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n)
    throw std::invalid_argument("solve_care: inconsistent dimensions");
  if (!is_symmetric_positive_definite(Q)) throw NotSPD("solve_care: Q is not symmetric positive definite");
  if (!is_symmetric_positive_definite(R)) throw NotSPD("solve_care: R is not symmetric positive definite");
  // Stabilizability is what the stabilizing solution needs; full
  // controllability would reject stable uncontrollable modes for no reason.
  if (!is_stabilizable(A, B))
    throw NotControllable("solve_care: (A, B) has an unstable uncontrollable mode");

  Eigen::LLT<Eigen::MatrixXd> lltR(R);
  const Eigen::MatrixXd BRinvBt = B * lltR.solve(B.transpose());

  Eigen::MatrixXd ham(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = A;
  ham.topRightCorner(n, n) = -BRinvBt;
  ham.bottomLeftCorner(n, n) = -Q;
  ham.bottomRightCorner(n, n) = -A.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> es(ham);
  if (es.info() != Eigen::Success)
    throw NoStabilizingSolution("solve_care: Hamiltonian eigendecomposition failed");

  Eigen::MatrixXcd basis(2 * n, n);
  int found = 0;
  for (int i = 0; i < 2 * n && found < n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) basis.col(found++) = es.eigenvectors().col(i);
  }
  if (found != n)
    throw NoStabilizingSolution("solve_care: Hamiltonian has no n-dimensional stable subspace");

  const Eigen::MatrixXcd X1 = basis.topRows(n);
  const Eigen::MatrixXcd X2 = basis.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> luX1(X1);
  if (!luX1.isInvertible())
    throw NoStabilizingSolution("solve_care: stable subspace is not a graph over the state space");
  Eigen::MatrixXd P = (X2 * luX1.inverse()).real();
  P = 0.5 * (P + P.transpose());

  // Newton (Kleinman) refinement: with F = A - BR^{-1}B'P_k, the next iterate
  // solves F'P + PF = -(Q + K'RK).
  const double tol = 1e-9 * std::max(1.0, Q.norm());
  double residual = care_residual(A, B, Q, lltR, P);
  for (int it = 0; it < 5 && residual > 1e-14 * std::max(1.0, Q.norm()); ++it) {
    const Eigen::MatrixXd K = lltR.solve(B.transpose() * P);
    const Eigen::MatrixXd F = A - B * K;
    Eigen::MatrixXd Pn = solve_lyapunov(F, Q + K.transpose() * R * K);
    const double rn = care_residual(A, B, Q, lltR, Pn);
    if (!Pn.allFinite() || rn >= residual) break;
    P = Pn;
    residual = rn;
  }

  if (residual > tol)
    throw NoStabilizingSolution("solve_care: residual above tolerance after refinement");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esP(P);
  if (esP.eigenvalues().minCoeff() <= 0.0)
    throw NoStabilizingSolution("solve_care: solution is not positive definite");

  RiccatiSolution sol;
  sol.P = P;
  sol.residual_norm = residual;
  sol.closed_loop_eigenvalues = Eigen::EigenSolver<Eigen::MatrixXd>(A - BRinvBt * P).eigenvalues();
  for (int i = 0; i < sol.closed_loop_eigenvalues.size(); ++i) {
    if (sol.closed_loop_eigenvalues(i).real() >= 0.0)
      throw NoStabilizingSolution("solve_care: closed loop is not Hurwitz");
  }
  return sol;
}

namespace detail {

// Higham-style scaling-and-squaring, fixed order-13 Pade approximant.
Eigen::MatrixXd expm_pade13(Eigen::MatrixXd A) {
  if (!A.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite input");
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  if (n == 0) return A;

  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    A /= std::pow(2.0, squarings);
  }

  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const Eigen::MatrixXd U =
      A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Eigen::MatrixXd V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  Eigen::MatrixXd F = (V - U).fullPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) F = F * F;
  return F;
}

}  // namespace detail

Eigen::MatrixXd linear_obs_gramian(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                   const Eigen::Ref<const Eigen::MatrixXd>& C,
                                   double tf, int steps) {
  if (!(tf > 0.0)) throw std::invalid_argument("linear_obs_gramian: tf must be positive");
  if (steps < 1) throw std::invalid_argument("linear_obs_gramian: steps must be >= 1");
  const int n = static_cast<int>(A.rows());
  const double dt = tf / steps;
  const Eigen::MatrixXd E = matrix_exponential(A, dt);
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd CtC = C.transpose() * C;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k <= steps; ++k) {
    const double wq = (k == 0 || k == steps) ? 0.5 : 1.0;
    W.noalias() += wq * dt * (Phi.transpose() * CtC * Phi);
    if (k < steps) Phi = E * Phi;
  }
  return 0.5 * (W + W.transpose());
}

int ctrb_rank(const Eigen::Ref<const Eigen::MatrixXd>& A,
              const Eigen::Ref<const Eigen::MatrixXd>& B) {
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(B.cols());
  Eigen::MatrixXd ctrb(n, n * p);
  ctrb.leftCols(p) = B;
  for (int i = 1; i < n; ++i)
    ctrb.middleCols(i * p, p) = A * ctrb.middleCols((i - 1) * p, p);
  return svd_rank(ctrb);
}

int obsv_rank(const Eigen::Ref<const Eigen::MatrixXd>& A,
              const Eigen::Ref<const Eigen::MatrixXd>& C) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(C.rows());
  Eigen::MatrixXd obsv(n * m, n);
  obsv.topRows(m) = C;
  for (int i = 1; i < n; ++i)
    obsv.middleRows(i * m, m) = obsv.middleRows((i - 1) * m, m) * A;
  return svd_rank(obsv);
}

DecayEnvelope estimate_decay_envelope(const Eigen::Ref<const Eigen::MatrixXd>& Abar,
                                      double horizon, int samples) {
  if (!(horizon > 0.0) || samples < 2)
    throw std::invalid_argument("estimate_decay_envelope: need horizon > 0 and samples >= 2");
  Eigen::EigenSolver<Eigen::MatrixXd> es(Abar);
  const double abscissa = es.eigenvalues().real().maxCoeff();
  if (abscissa >= 0.0)
    throw NotHurwitz("estimate_decay_envelope: matrix has an eigenvalue with Re >= 0");

  DecayEnvelope env;
  env.a = 0.9 * std::abs(abscissa);
  env.sigma_max_squared = spectral_norm(Abar);
  env.sigma_max_squared *= env.sigma_max_squared;

  const double dt = horizon / (samples - 1);
  const Eigen::MatrixXd E = matrix_exponential(Abar, dt);
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(Abar.rows(), Abar.cols());
  double K = 1.0;
  for (int j = 0; j < samples; ++j) {
    const double t = j * dt;
    K = std::max(K, spectral_norm(Phi) * std::exp(env.a * t));
    if (j + 1 < samples) Phi = E * Phi;
  }
  env.K = K;
  return env;
}

}  // namespace obsyn
