#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "obsyn/errors.hpp"

namespace obsyn {

/// Stabilizing solution of the continuous algebraic Riccati equation
///   Q + A'P + PA - PBR^{-1}B'P = 0.
struct RiccatiSolution {
  Eigen::MatrixXd P;                          // symmetric positive definite
  double residual_norm = 0.0;                 // Frobenius norm of the re-substituted CARE
  Eigen::VectorXcd closed_loop_eigenvalues;   // spectrum of A - BR^{-1}B'P
};

/// Exponential-decay envelope ||e^{At}||_2 <= K e^{-a t} of a Hurwitz matrix,
/// estimated on a sampled grid.
struct DecayEnvelope {
  double K = 1.0;                  // amplitude constant, clamped >= 1
  double a = 0.0;                  // decay rate, > 0
  double sigma_max_squared = 0.0;  // sigma_max(A)^2
};

/// Solves A'P + PA + Q = 0 for symmetric P (A need not be symmetric).
/// Dense Kronecker formulation; intended for small n.
Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& A,
                               const Eigen::Ref<const Eigen::MatrixXd>& Q);

/// Stabilizing CARE solution via stable-invariant-subspace extraction of the
/// Hamiltonian matrix, refined with Newton (Kleinman) iterations.
///
/// Throws NotControllable, NotSPD, or NoStabilizingSolution.
RiccatiSolution solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::Ref<const Eigen::MatrixXd>& Q,
                           const Eigen::Ref<const Eigen::MatrixXd>& R);

namespace detail {
Eigen::MatrixXd expm_pade13(Eigen::MatrixXd A);
}

/// e^{Mt} by scaling-and-squaring with the order-13 Pade approximant.
template <typename Derived>
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixBase<Derived>& M, double t = 1.0) {
  return detail::expm_pade13(M.derived().template cast<double>() * t);
}

/// Observability Gramian of the linear pair (A, C) over [0, tf]:
/// integral of e^{A't} C'C e^{At}, composite trapezoid on `steps` intervals.
Eigen::MatrixXd linear_obs_gramian(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                   const Eigen::Ref<const Eigen::MatrixXd>& C,
                                   double tf, int steps = 200);

/// Numerical rank of the Kalman controllability matrix [B, AB, ..., A^{n-1}B].
int ctrb_rank(const Eigen::Ref<const Eigen::MatrixXd>& A,
              const Eigen::Ref<const Eigen::MatrixXd>& B);

/// Numerical rank of the stacked observability matrix [C; CA; ...; CA^{n-1}].
int obsv_rank(const Eigen::Ref<const Eigen::MatrixXd>& A,
              const Eigen::Ref<const Eigen::MatrixXd>& C);

/// Fits (K, a) with ||e^{At}||_2 <= K e^{-at} on a uniform sample grid over
/// [0, horizon]. a is 0.9 of the spectral abscissa magnitude; K is the
/// smallest sampled-grid-consistent constant, clamped >= 1.
///
/// Throws NotHurwitz when any eigenvalue has nonnegative real part.
DecayEnvelope estimate_decay_envelope(const Eigen::Ref<const Eigen::MatrixXd>& Abar,
                                      double horizon, int samples = 200);

/// True when M is symmetric (to a relative tolerance) with all eigenvalues > 0.
bool is_symmetric_positive_definite(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                    double tol = 1e-10);

}  // namespace obsyn
