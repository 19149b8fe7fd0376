#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "obsyn/errors.hpp"

namespace obsyn {

/// Linear plant dx/dt = A x + B u with a nonlinear output elsewhere.
class LinearSystem {
 public:
  LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int p() const { return static_cast<int>(B_.cols()); }

 private:
  Eigen::MatrixXd A_, B_;
};

/// Output map y = h(x) with an optional analytic Jacobian and a domain guard
/// marking singular inputs. When no analytic Jacobian is supplied, a central
/// finite difference with step 1e-6 * max(1, ||x||) is used.
class ObservationModel {
 public:
  using EvalFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using GuardFn = std::function<bool(const Eigen::VectorXd&)>;

  ObservationModel(std::string name, int output_dim, EvalFn eval,
                   JacobianFn jacobian = nullptr, GuardFn guard = nullptr);

  const std::string& name() const { return name_; }
  int output_dim() const { return output_dim_; }
  bool in_domain(const Eigen::VectorXd& x) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return eval_(x); }
  /// Analytic Jacobian when available, otherwise central finite differences.
  /// Throws DomainViolation outside the guard.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

  // Built-in catalog.
  /// y = x2/x1 (scalar bearing); guarded against |x1| ~ 0.
  static ObservationModel bearing_ratio();
  /// y_j = x_{j+1}/x1 for j = 1..n-1; guarded against |x1| ~ 0.
  static ObservationModel relative_bearing(int n);
  /// y = C x.
  static ObservationModel linear(Eigen::MatrixXd C);

 private:
  std::string name_;
  int output_dim_;
  EvalFn eval_;
  JacobianFn jacobian_;
  GuardFn guard_;
};

/// Oscillation gains of the augmented feedback, one entry per input channel.
/// S_ii(x) = k1_i * exp(-k2_i/||x||) * sin^2(k3_i ||x|| + k4_i).
struct AugmentedGains {
  Eigen::VectorXd k1, k2, k3, k4;

  int channels() const { return static_cast<int>(k1.size()); }
  /// Enforces k1 >= 0, k2 > 0, k4 in [0, pi/2), finite entries, equal sizes.
  void validate() const;

  static AugmentedGains constant(int p, double v1, double v2, double v3, double v4);
  /// Flat parameter vector [k1; k2; k3; k4] used by the optimizer.
  Eigen::VectorXd flatten() const;
  static AugmentedGains unflatten(const Eigen::VectorXd& theta, int p);
};

/// Diagonal of S(x). Continuously extended by S(0) = 0.
Eigen::VectorXd s_matrix(const AugmentedGains& gains, const Eigen::VectorXd& x);

/// S(x) diagonal together with the radial derivative ds/d||x|| and the
/// per-gain partials ds_i/dk_j (column j-1 holds dS/dk_j). All derivatives
/// vanish at x = 0 by the flat extension.
struct SDerivatives {
  Eigen::VectorXd s;        // p
  Eigen::VectorXd ds_dr;    // p
  Eigen::MatrixXd ds_dk;    // p x 4
};
SDerivatives s_matrix_derivatives(const AugmentedGains& gains, const Eigen::VectorXd& x);

/// State feedback: the plain LQR law u = -R^{-1}B'Px or its augmented form
/// u = -[R^{-1} + S(x)]B'Px. Immutable after construction.
class Controller {
 public:
  enum class Kind { kLqr, kAugmented };

  static Controller lqr(Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B);
  static Controller augmented(Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B,
                              AugmentedGains gains);

  Kind kind() const { return kind_; }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& R_inverse() const { return Rinv_; }
  /// B'P, the map from state to the feedback's gain input.
  const Eigen::MatrixXd& BtP() const { return BtP_; }
  const AugmentedGains& gains() const { return gains_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

 private:
  Controller(Kind kind, Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B,
             AugmentedGains gains);
  Kind kind_;
  Eigen::MatrixXd P_, R_, B_, Rinv_, BtP_;
  AugmentedGains gains_;
};

/// Control input at x.
inline Eigen::VectorXd control(const Controller& ctrl, const Eigen::VectorXd& x) {
  return ctrl(x);
}

struct LyapunovRate {
  double V = 0.0;
  double Vdot = 0.0;
};

/// V = x'Px and its closed-loop derivative
/// Vdot = x'(-Q - PBR^{-1}B'P - 2PBSB'P)x  (S the diagonal of the oscillatory
/// schedule at x; pass zero for the plain LQR loop).
LyapunovRate lyapunov_rate(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& s_diag, const Eigen::VectorXd& x);

}  // namespace obsyn
