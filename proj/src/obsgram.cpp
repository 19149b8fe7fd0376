#include "obsyn/obsgram.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace obsyn {

namespace {

// Output differences y^{+i}(t_k) - y^{-i}(t_k) for every direction and node.
// diffs[i] is (steps+1) x m.
std::vector<Eigen::MatrixXd> output_differences(const TrajectoryBundle& bundle,
                                                const ObservationModel& h) {
  const int n = bundle.state_dim();
  const int nodes = bundle.grid().step_count() + 1;
  std::vector<Eigen::MatrixXd> diffs(n);
  for (int i = 0; i < n; ++i) {
    diffs[i].resize(nodes, h.output_dim());
    for (int k = 0; k < nodes; ++k) {
      const Eigen::VectorXd xp = bundle.plus[i].state_at(k);
      const Eigen::VectorXd xm = bundle.minus[i].state_at(k);
      if (!h.in_domain(xp))
        throw DomainViolation(bundle.grid().time(k), i + 1,
                              "empirical gramian: " + h.name() + " undefined on plus[" +
                                  std::to_string(i) + "] at t = " +
                                  std::to_string(bundle.grid().time(k)));
      if (!h.in_domain(xm))
        throw DomainViolation(bundle.grid().time(k), -(i + 1),
                              "empirical gramian: " + h.name() + " undefined on minus[" +
                                  std::to_string(i) + "] at t = " +
                                  std::to_string(bundle.grid().time(k)));
      diffs[i].row(k) = (h(xp) - h(xm)).transpose();
    }
  }
  return diffs;
}

}  // namespace

ObservabilityReport empirical_gramian(const TrajectoryBundle& bundle, const ObservationModel& h) {
  const int n = bundle.state_dim();
  const int steps = bundle.grid().step_count();
  const double dt = bundle.grid().dt();
  const double scale = 1.0 / (4.0 * bundle.epsilon * bundle.epsilon);

  const auto diffs = output_differences(bundle, h);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k <= steps; ++k) {
        const double wq = (k == 0 || k == steps) ? 0.5 : 1.0;
        acc += wq * diffs[i].row(k).dot(diffs[j].row(k));
      }
      W(i, j) = W(j, i) = scale * dt * acc;
    }
  }
  W = 0.5 * (W + W.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  Eigen::VectorXd lam = es.eigenvalues();
  // A Gram matrix cannot dip below roundoff-negative.
  if (lam.minCoeff() < -1e-10)
    throw std::logic_error("empirical_gramian: Gram matrix eigenvalue below -1e-10");
  const Eigen::VectorXd clamped = lam.cwiseMax(0.0);
  ObservabilityReport report;
  report.W = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  report.W = 0.5 * (report.W + report.W.transpose());
  report.trace = clamped.sum();
  report.min_eigenvalue = clamped.minCoeff();
  report.determinant = clamped.prod();
  const double rank_floor = 1e-8 * std::max(1.0, clamped.maxCoeff());
  report.numerical_rank = static_cast<int>((clamped.array() >= rank_floor).count());
  return report;
}

double trace_gramian(const TrajectoryBundle& bundle, const ObservationModel& h) {
  const int steps = bundle.grid().step_count();
  const double dt = bundle.grid().dt();
  const auto diffs = output_differences(bundle, h);
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double wq = (k == 0 || k == steps) ? 0.5 : 1.0;
    double sum = 0.0;
    for (const auto& d : diffs) sum += d.row(k).squaredNorm();
    acc += wq * sum;
  }
  return acc * dt / (4.0 * bundle.epsilon * bundle.epsilon);
}

double l2_at(int t_index, const TrajectoryBundle& bundle, const ObservationModel& h,
             const CostWeights& weights) {
  const int n = bundle.state_dim();
  if (t_index < 0 || t_index > bundle.grid().step_count())
    throw std::invalid_argument("l2_at: t_index off the grid");
  const double t = bundle.grid().time(t_index);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xp = bundle.plus[i].state_at(t_index);
    const Eigen::VectorXd xm = bundle.minus[i].state_at(t_index);
    if (!h.in_domain(xp)) throw DomainViolation(t, i + 1, "l2_at: " + h.name() + " undefined");
    if (!h.in_domain(xm)) throw DomainViolation(t, -(i + 1), "l2_at: " + h.name() + " undefined");
    sum += (h(xp) - h(xm)).squaredNorm();
  }
  return std::exp(-weights.alpha * t) / (4.0 * bundle.epsilon * bundle.epsilon) * sum;
}

double l1_at(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::MatrixXd& Q,
             const Eigen::MatrixXd& R) {
  return x.dot(Q * x) + u.dot(R * u);
}

}  // namespace obsyn
