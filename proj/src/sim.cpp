#include "obsyn/sim.hpp"

#include <cmath>
#include <string>

namespace obsyn {

SimGrid::SimGrid(double tf, double dt) {
  if (!(tf > 0.0) || !(dt > 0.0) || !std::isfinite(tf) || !std::isfinite(dt))
    throw std::invalid_argument("SimGrid: tf and dt must be positive and finite");
  steps_ = std::max(1, static_cast<int>(std::lround(tf / dt)));
  dt_ = dt;
}

SimGrid SimGrid::with_steps(double tf, int steps) {
  if (!(tf > 0.0) || steps < 1)
    throw std::invalid_argument("SimGrid: tf must be positive and steps >= 1");
  return SimGrid(steps, tf / steps);
}

Trajectory integrate(const StateField& field, const Eigen::VectorXd& x0, const SimGrid& grid,
                     const ControlRecorder& record_control) {
  const int n = static_cast<int>(x0.size());
  const int steps = grid.step_count();
  const double dt = grid.dt();

  Trajectory traj{grid, Eigen::MatrixXd(steps + 1, n), Eigen::MatrixXd()};
  if (record_control) {
    const Eigen::VectorXd u0 = record_control(x0);
    traj.controls.resize(steps + 1, u0.size());
    traj.controls.row(0) = u0.transpose();
  }

  Eigen::VectorXd x = x0;
  traj.states.row(0) = x.transpose();
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd f1 = field(x);
    const Eigen::VectorXd f2 = field(x + 0.5 * dt * f1);
    const Eigen::VectorXd f3 = field(x + 0.5 * dt * f2);
    const Eigen::VectorXd f4 = field(x + dt * f3);
    x += dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
    if (!x.allFinite())
      throw NonFiniteState("integrate: non-finite state at step " + std::to_string(k + 1) +
                           " (t = " + std::to_string(grid.time(k + 1)) + ")");
    traj.states.row(k + 1) = x.transpose();
    if (record_control) traj.controls.row(k + 1) = record_control(x).transpose();
  }
  return traj;
}

Trajectory simulate_closed_loop(const LinearSystem& sys, const Controller& ctrl,
                                const Eigen::VectorXd& x0, const SimGrid& grid) {
  auto field = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sys.A() * x + sys.B() * ctrl(x);
  };
  auto recorder = [&](const Eigen::VectorXd& x) { return ctrl(x); };
  return integrate(field, x0, grid, recorder);
}

TrajectoryBundle simulate_bundle(const LinearSystem& sys, const Controller& ctrl,
                                 const Eigen::VectorXd& x0, double epsilon, const SimGrid& grid) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidEpsilon("simulate_bundle: epsilon must be positive and finite");
  const int n = sys.n();
  if (x0.size() != n) throw std::invalid_argument("simulate_bundle: x0 dimension mismatch");

  TrajectoryBundle bundle;
  bundle.epsilon = epsilon;
  bundle.nominal = simulate_closed_loop(sys, ctrl, x0, grid);
  bundle.plus.reserve(n);
  bundle.minus.reserve(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = epsilon;
    bundle.plus.push_back(simulate_closed_loop(sys, ctrl, x0 + e, grid));
    bundle.minus.push_back(simulate_closed_loop(sys, ctrl, x0 - e, grid));
  }
  return bundle;
}

}  // namespace obsyn
