#pragma once

#include <Eigen/Dense>

#include "obsyn/model.hpp"
#include "obsyn/sim.hpp"

namespace obsyn {

/// Empirical observability Gramian with the scalar metrics used to judge it.
struct ObservabilityReport {
  Eigen::MatrixXd W;            // n x n, symmetric PSD (eigenvalues clamped at 0)
  double trace = 0.0;
  double min_eigenvalue = 0.0;
  double determinant = 0.0;
  int numerical_rank = 0;       // eigenvalues >= 1e-8 * max(1, lambda_max)
};

/// Observability weight w and transient discount rate alpha of the augmented
/// cost l1 - w * l2.
struct CostWeights {
  double w = 0.0;
  double alpha = 0.0;
};

/// W_ij = 1/(4 eps^2) * integral of (y^{+i}-y^{-i})'(y^{+j}-y^{-j}),
/// composite trapezoid on the bundle grid.
/// Throws DomainViolation when h is evaluated outside its guard.
ObservabilityReport empirical_gramian(const TrajectoryBundle& bundle, const ObservationModel& h);

/// Trace form: 1/(4 eps^2) * integral of sum_i ||h(x^{+i}) - h(x^{-i})||^2.
double trace_gramian(const TrajectoryBundle& bundle, const ObservationModel& h);

/// Discounted observability integrand at grid node t_index:
/// e^{-alpha t}/(4 eps^2) * sum_i ||h(x^{+i}(t)) - h(x^{-i}(t))||^2.
double l2_at(int t_index, const TrajectoryBundle& bundle, const ObservationModel& h,
             const CostWeights& weights);

/// Quadratic running cost x'Qx + u'Ru.
double l1_at(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::MatrixXd& Q,
             const Eigen::MatrixXd& R);

}  // namespace obsyn
