#include "obsyn/ekf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>

namespace obsyn {

namespace {

Eigen::MatrixXd symmetrize_floor(Eigen::MatrixXd P) {
  P = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(1e-12);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

EkfConfig EkfConfig::defaults(int n, int m, double dt) {
  EkfConfig cfg;
  cfg.process_noise = 1e-6 * Eigen::MatrixXd::Identity(n, n);
  cfg.measurement_noise = 1e-4 * Eigen::MatrixXd::Identity(m, m);
  cfg.measurement_interval = 10.0 * dt;
  cfg.initial_covariance = Eigen::MatrixXd::Identity(n, n);
  return cfg;
}

EstimateTrace ekf_run(const LinearSystem& sys, const ObservationModel& h, const Controller& ctrl,
                      const Eigen::VectorXd& x0, const EkfConfig& config, const SimGrid& grid,
                      std::uint64_t seed) {
  const int n = sys.n();
  const int m = h.output_dim();
  const int steps = grid.step_count();
  const double dt = grid.dt();

  const double ratio = config.measurement_interval / dt;
  const int meas_every = static_cast<int>(std::lround(ratio));
  if (meas_every < 1 || std::abs(ratio - meas_every) > 1e-9)
    throw std::invalid_argument("ekf_run: measurement_interval must be a positive multiple of dt");
  if (config.process_noise.rows() != n || config.measurement_noise.rows() != m ||
      config.initial_covariance.rows() != n)
    throw std::invalid_argument("ekf_run: noise/covariance dimension mismatch");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::MatrixXd meas_chol =
      Eigen::LLT<Eigen::MatrixXd>(config.measurement_noise).matrixL();

  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd x_true = x0;
  Eigen::VectorXd x_hat = config.initial_estimate_scale * x0;
  Eigen::MatrixXd P = config.initial_covariance;

  EstimateTrace trace;
  trace.times.resize(steps + 1);
  trace.true_states.resize(steps + 1, n);
  trace.estimates.resize(steps + 1, n);
  trace.covariances.reserve(steps + 1);
  trace.error_norms.resize(steps + 1);
  trace.three_sigma_bounds.resize(steps + 1, n);

  auto record = [&](int k) {
    trace.times(k) = grid.time(k);
    trace.true_states.row(k) = x_true.transpose();
    trace.estimates.row(k) = x_hat.transpose();
    trace.covariances.push_back(P);
    trace.error_norms(k) = (x_hat - x_true).norm();
    trace.three_sigma_bounds.row(k) = (3.0 * P.diagonal().cwiseMax(0.0).cwiseSqrt()).transpose();
  };
  record(0);

  long violations = 0, samples = 0;

  for (int k = 0; k < steps; ++k) {
    // Joint RK4 on (truth, estimate); both see the same applied control.
    auto pair_field = [&](const Eigen::VectorXd& xt, const Eigen::VectorXd& xh,
                          Eigen::VectorXd& ft, Eigen::VectorXd& fh) {
      const Eigen::VectorXd u = ctrl(config.feedback_from_estimate ? xh : xt);
      const Eigen::VectorXd Bu = B * u;
      ft = A * xt + Bu;
      fh = A * xh + Bu;
    };
    Eigen::VectorXd f1t(n), f1h(n), f2t(n), f2h(n), f3t(n), f3h(n), f4t(n), f4h(n);
    pair_field(x_true, x_hat, f1t, f1h);
    pair_field(x_true + 0.5 * dt * f1t, x_hat + 0.5 * dt * f1h, f2t, f2h);
    pair_field(x_true + 0.5 * dt * f2t, x_hat + 0.5 * dt * f2h, f3t, f3h);
    pair_field(x_true + dt * f3t, x_hat + dt * f3h, f4t, f4h);
    x_true += dt / 6.0 * (f1t + 2.0 * f2t + 2.0 * f3t + f4t);
    x_hat += dt / 6.0 * (f1h + 2.0 * f2h + 2.0 * f3h + f4h);
    if (!x_true.allFinite() || !x_hat.allFinite())
      throw NonFiniteState("ekf_run: non-finite state at step " + std::to_string(k + 1));

    // Covariance propagation, Jacobian frozen over the step.
    Eigen::MatrixXd F = A;
    if (config.covariance_model == EkfConfig::CovarianceModel::kClosedLoop) {
      const Eigen::VectorXd s = s_matrix(ctrl.gains(), x_hat);
      F = A - B * (ctrl.R_inverse() + Eigen::MatrixXd(s.asDiagonal())) * ctrl.BtP();
    }
    auto pdot = [&](const Eigen::MatrixXd& Pm) -> Eigen::MatrixXd {
      return F * Pm + Pm * F.transpose() + config.process_noise;
    };
    const Eigen::MatrixXd p1 = pdot(P);
    const Eigen::MatrixXd p2 = pdot(P + 0.5 * dt * p1);
    const Eigen::MatrixXd p3 = pdot(P + 0.5 * dt * p2);
    const Eigen::MatrixXd p4 = pdot(P + dt * p3);
    P += dt / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
    P = 0.5 * (P + P.transpose());

    if ((k + 1) % meas_every == 0) {
      const double t = grid.time(k + 1);
      if (!h.in_domain(x_true))
        throw DomainViolation(t, 0, "ekf_run: " + h.name() + " undefined at the true state");
      if (!h.in_domain(x_hat))
        throw DomainViolation(t, 0, "ekf_run: " + h.name() + " undefined at the estimate");

      Eigen::VectorXd noise(m);
      for (int j = 0; j < m; ++j) noise(j) = gauss(rng);
      const Eigen::VectorXd z = h(x_true) + meas_chol * noise;

      const Eigen::MatrixXd H = observation_jacobian(h, x_hat);
      const Eigen::MatrixXd S = H * P * H.transpose() + config.measurement_noise;
      Eigen::LLT<Eigen::MatrixXd> lltS(S);
      if (lltS.info() != Eigen::Success || S.norm() < 1e-300)
        throw CovarianceBreakdown("ekf_run: innovation covariance is numerically singular at t = " +
                                  std::to_string(t));
      const Eigen::MatrixXd K = lltS.solve(H * P).transpose();
      x_hat += K * (z - h(x_hat));
      const Eigen::MatrixXd IKH = I - K * H;
      P = IKH * P * IKH.transpose() + K * config.measurement_noise * K.transpose();
      P = symmetrize_floor(P);
    }

    record(k + 1);
    if (k + 1 > steps / 4) {
      const Eigen::VectorXd err = (x_hat - x_true).cwiseAbs();
      for (int j = 0; j < n; ++j) {
        ++samples;
        if (err(j) > trace.three_sigma_bounds(k + 1, j)) ++violations;
      }
    }
  }

  trace.sigma_violation_fraction =
      samples > 0 ? static_cast<double>(violations) / static_cast<double>(samples) : 0.0;
  return trace;
}

}  // namespace obsyn
