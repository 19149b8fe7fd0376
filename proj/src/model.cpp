#include "obsyn/model.hpp"

#include <cmath>

namespace obsyn {

LinearSystem::LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B)
    : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() != A_.cols()) throw std::invalid_argument("LinearSystem: A must be square");
  if (B_.rows() != A_.rows()) throw std::invalid_argument("LinearSystem: B row count must match A");
  if (!A_.allFinite() || !B_.allFinite())
    throw std::invalid_argument("LinearSystem: non-finite entries");
}

ObservationModel::ObservationModel(std::string name, int output_dim, EvalFn eval,
                                   JacobianFn jacobian, GuardFn guard)
    : name_(std::move(name)),
      output_dim_(output_dim),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      guard_(std::move(guard)) {
  if (output_dim_ < 1) throw std::invalid_argument("ObservationModel: output_dim must be >= 1");
  if (!eval_) throw std::invalid_argument("ObservationModel: evaluate function required");
}

bool ObservationModel::in_domain(const Eigen::VectorXd& x) const {
  return guard_ ? guard_(x) : true;
}

Eigen::MatrixXd ObservationModel::jacobian(const Eigen::VectorXd& x) const {
  if (!in_domain(x))
    throw DomainViolation("ObservationModel::jacobian: " + name_ + " evaluated outside its domain");
  if (jacobian_) return jacobian_(x);
  const int n = static_cast<int>(x.size());
  const double step = 1e-6 * std::max(1.0, x.norm());
  Eigen::MatrixXd J(output_dim_, n);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    xp(j) += step;
    xm(j) -= step;
    if (!in_domain(xp) || !in_domain(xm))
      throw DomainViolation("ObservationModel::jacobian: finite-difference probe left the domain");
    J.col(j) = (eval_(xp) - eval_(xm)) / (2.0 * step);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return J;
}

ObservationModel ObservationModel::bearing_ratio() {
  auto guard = [](const Eigen::VectorXd& x) {
    return std::abs(x(0)) > 1e-9 * std::max(1.0, x.norm());
  };
  auto eval = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(1);
    y(0) = x(1) / x(0);
    return y;
  };
  auto jac = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(1, x.size());
    J(0, 0) = -x(1) / (x(0) * x(0));
    J(0, 1) = 1.0 / x(0);
    return J;
  };
  return ObservationModel("bearing_ratio", 1, eval, jac, guard);
}

ObservationModel ObservationModel::relative_bearing(int n) {
  if (n < 2) throw std::invalid_argument("relative_bearing: need n >= 2");
  auto guard = [](const Eigen::VectorXd& x) {
    return std::abs(x(0)) > 1e-9 * std::max(1.0, x.norm());
  };
  auto eval = [n](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n - 1);
    for (int j = 1; j < n; ++j) y(j - 1) = x(j) / x(0);
    return y;
  };
  auto jac = [n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n - 1, n);
    for (int j = 1; j < n; ++j) {
      J(j - 1, 0) = -x(j) / (x(0) * x(0));
      J(j - 1, j) = 1.0 / x(0);
    }
    return J;
  };
  return ObservationModel("relative_bearing", n - 1, eval, jac, guard);
}

ObservationModel ObservationModel::linear(Eigen::MatrixXd C) {
  const int m = static_cast<int>(C.rows());
  auto eval = [C](const Eigen::VectorXd& x) -> Eigen::VectorXd { return C * x; };
  auto jac = [C](const Eigen::VectorXd&) -> Eigen::MatrixXd { return C; };
  return ObservationModel("linear", m, eval, jac, nullptr);
}

void AugmentedGains::validate() const {
  const auto p = k1.size();
  if (k2.size() != p || k3.size() != p || k4.size() != p)
    throw std::invalid_argument("AugmentedGains: gain vectors must share one length");
  if (p == 0) throw std::invalid_argument("AugmentedGains: empty gain vectors");
  if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite())
    throw std::invalid_argument("AugmentedGains: non-finite entries");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (k1(i) < 0.0) throw std::invalid_argument("AugmentedGains: k1 must be nonnegative");
    if (!(k2(i) > 0.0)) throw std::invalid_argument("AugmentedGains: k2 must be positive");
    if (k4(i) < 0.0 || k4(i) >= M_PI_2)
      throw std::invalid_argument("AugmentedGains: k4 must lie in [0, pi/2)");
  }
}

AugmentedGains AugmentedGains::constant(int p, double v1, double v2, double v3, double v4) {
  AugmentedGains g;
  g.k1 = Eigen::VectorXd::Constant(p, v1);
  g.k2 = Eigen::VectorXd::Constant(p, v2);
  g.k3 = Eigen::VectorXd::Constant(p, v3);
  g.k4 = Eigen::VectorXd::Constant(p, v4);
  return g;
}

Eigen::VectorXd AugmentedGains::flatten() const {
  const int p = channels();
  Eigen::VectorXd theta(4 * p);
  theta << k1, k2, k3, k4;
  return theta;
}

AugmentedGains AugmentedGains::unflatten(const Eigen::VectorXd& theta, int p) {
  if (theta.size() != 4 * p) throw std::invalid_argument("AugmentedGains: bad flat size");
  AugmentedGains g;
  g.k1 = theta.segment(0, p);
  g.k2 = theta.segment(p, p);
  g.k3 = theta.segment(2 * p, p);
  g.k4 = theta.segment(3 * p, p);
  return g;
}

Eigen::VectorXd s_matrix(const AugmentedGains& gains, const Eigen::VectorXd& x) {
  return s_matrix_derivatives(gains, x).s;
}

SDerivatives s_matrix_derivatives(const AugmentedGains& gains, const Eigen::VectorXd& x) {
  const int p = gains.channels();
  SDerivatives d;
  d.s = Eigen::VectorXd::Zero(p);
  d.ds_dr = Eigen::VectorXd::Zero(p);
  d.ds_dk = Eigen::MatrixXd::Zero(p, 4);
  const double r = x.norm();
  if (r == 0.0) return d;  // flat extension: S and every derivative vanish
  for (int i = 0; i < p; ++i) {
    // exp(-k2/r) underflows long before the 1/r factors overflow; skip the
    // channel once the exponent is hopeless to avoid inf * 0.
    if (gains.k2(i) / r > 500.0) continue;
    const double e = std::exp(-gains.k2(i) / r);
    const double phi = gains.k3(i) * r + gains.k4(i);
    const double sin_phi = std::sin(phi);
    const double sin2 = sin_phi * sin_phi;
    const double sin_2phi = std::sin(2.0 * phi);
    d.s(i) = gains.k1(i) * e * sin2;
    d.ds_dr(i) = gains.k1(i) * e * (gains.k2(i) / (r * r) * sin2 + gains.k3(i) * sin_2phi);
    d.ds_dk(i, 0) = e * sin2;
    d.ds_dk(i, 1) = -gains.k1(i) * e * sin2 / r;
    d.ds_dk(i, 2) = gains.k1(i) * e * r * sin_2phi;
    d.ds_dk(i, 3) = gains.k1(i) * e * sin_2phi;
  }
  return d;
}

Controller::Controller(Kind kind, Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B,
                       AugmentedGains gains)
    : kind_(kind), P_(std::move(P)), R_(std::move(R)), B_(std::move(B)), gains_(std::move(gains)) {
  if (P_.rows() != P_.cols() || P_.rows() != B_.rows())
    throw std::invalid_argument("Controller: P/B dimension mismatch");
  if (R_.rows() != R_.cols() || R_.rows() != B_.cols())
    throw std::invalid_argument("Controller: R dimension mismatch");
  Rinv_ = Eigen::LLT<Eigen::MatrixXd>(R_).solve(Eigen::MatrixXd::Identity(R_.rows(), R_.cols()));
  BtP_ = B_.transpose() * P_;
  if (kind_ == Kind::kAugmented) gains_.validate();
}

Controller Controller::lqr(Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B) {
  AugmentedGains zero = AugmentedGains::constant(static_cast<int>(B.cols()), 0.0, 1.0, 1.0, 0.0);
  return Controller(Kind::kLqr, std::move(P), std::move(R), std::move(B), std::move(zero));
}

Controller Controller::augmented(Eigen::MatrixXd P, Eigen::MatrixXd R, Eigen::MatrixXd B,
                                 AugmentedGains gains) {
  return Controller(Kind::kAugmented, std::move(P), std::move(R), std::move(B), std::move(gains));
}

Eigen::VectorXd Controller::operator()(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = BtP_ * x;
  Eigen::VectorXd u = -(Rinv_ * y);
  if (kind_ == Kind::kAugmented) u -= s_matrix(gains_, x).cwiseProduct(y);
  return u;
}

LyapunovRate lyapunov_rate(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& s_diag, const Eigen::VectorXd& x) {
  LyapunovRate out;
  out.V = x.dot(P * x);
  const Eigen::VectorXd y = B.transpose() * (P * x);
  const Eigen::LLT<Eigen::MatrixXd> lltR(R);
  out.Vdot = -x.dot(Q * x) - y.dot(lltR.solve(y)) - 2.0 * y.dot(s_diag.cwiseProduct(y));
  return out;
}

}  // namespace obsyn
