#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "obsyn/model.hpp"
#include "obsyn/sim.hpp"

namespace obsyn {

/// Continuous-discrete EKF configuration. The truth evolves deterministically
/// under the controller; process noise enters the filter covariance only, and
/// measurement noise is sampled from a seeded generator.
struct EkfConfig {
  Eigen::MatrixXd process_noise;       // n x n PSD, continuous-time intensity
  Eigen::MatrixXd measurement_noise;   // m x m SPD
  double measurement_interval = 0.0;   // a multiple of the grid dt
  Eigen::MatrixXd initial_covariance;  // n x n SPD
  double initial_estimate_scale = 1.25;

  /// Jacobian used for covariance propagation between measurements.
  /// kOpenLoop matches the filter's mean model (the applied control is a
  /// known signal, so the error dynamics carry the plant A alone) and is the
  /// default; kClosedLoop propagates with A - B(R^{-1}+S(xhat))B'P instead.
  enum class CovarianceModel { kOpenLoop, kClosedLoop };
  CovarianceModel covariance_model = CovarianceModel::kOpenLoop;

  /// Validation-only variant: feed the controller from the estimate instead
  /// of the true state. Excluded from the acceptance pipeline.
  bool feedback_from_estimate = false;

  static EkfConfig defaults(int n, int m, double dt);
};

/// Truth, estimate, covariance and consistency record of one EKF run.
struct EstimateTrace {
  Eigen::VectorXd times;
  Eigen::MatrixXd true_states;          // (steps+1) x n
  Eigen::MatrixXd estimates;            // (steps+1) x n
  std::vector<Eigen::MatrixXd> covariances;
  Eigen::VectorXd error_norms;          // ||xhat - x|| per node
  Eigen::MatrixXd three_sigma_bounds;   // 3*sqrt(P_ii) per node
  /// Fraction of per-component samples beyond their 3-sigma bound, counted
  /// after the first quarter of the horizon.
  double sigma_violation_fraction = 0.0;
};

/// EKF linearization of the output map: analytic Jacobian when the model has
/// one, central finite differences otherwise. Throws DomainViolation.
inline Eigen::MatrixXd observation_jacobian(const ObservationModel& h, const Eigen::VectorXd& x) {
  return h.jacobian(x);
}

/// Runs the truth and the continuous-discrete EKF side by side: RK4 mean
/// propagation with the applied control, covariance propagation per the
/// configured model, Joseph-form updates at each measurement instant.
/// Throws DomainViolation and CovarianceBreakdown.
EstimateTrace ekf_run(const LinearSystem& sys, const ObservationModel& h, const Controller& ctrl,
                      const Eigen::VectorXd& x0, const EkfConfig& config, const SimGrid& grid,
                      std::uint64_t seed);

}  // namespace obsyn
