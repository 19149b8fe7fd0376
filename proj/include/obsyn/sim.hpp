#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "obsyn/errors.hpp"
#include "obsyn/model.hpp"

namespace obsyn {

/// Uniform time grid [0, tf] with tf an exact multiple of dt. When the
/// requested tf is not a multiple, it is snapped to the nearest one.
class SimGrid {
 public:
  /// Placeholder single-step grid; reassign before use.
  SimGrid() : steps_(1), dt_(1.0) {}
  SimGrid(double tf, double dt);
  static SimGrid with_steps(double tf, int steps);

  int step_count() const { return steps_; }
  double dt() const { return dt_; }
  double tf() const { return steps_ * dt_; }
  double time(int k) const { return k * dt_; }

 private:
  SimGrid(int steps, double dt) : steps_(steps), dt_(dt) {}
  int steps_;
  double dt_;
};

/// Default integration step: 0.005 * tf.
inline double default_time_step(double tf) { return 0.005 * tf; }
/// Default horizon from a decay rate a: the ~settling time 8/a.
inline double default_horizon(double decay_rate) { return 8.0 / decay_rate; }
/// Default Gramian perturbation: 1e-2 * max(1, ||x0||).
inline double default_epsilon(const Eigen::VectorXd& x0) {
  return 1e-2 * std::max(1.0, x0.norm());
}

/// States (and optionally controls) sampled at the grid nodes; row k is the
/// state at time k*dt, row 0 the initial condition.
struct Trajectory {
  SimGrid grid;
  Eigen::MatrixXd states;    // (step_count+1) x n
  Eigen::MatrixXd controls;  // (step_count+1) x p, or 0 columns when not recorded

  const Eigen::VectorXd state_at(int k) const { return states.row(k).transpose(); }
  const Eigen::VectorXd control_at(int k) const { return controls.row(k).transpose(); }
};

/// Nominal plus the 2n trajectories from x0 +- epsilon*e_i, all on one grid
/// and all driven by the same feedback law.
struct TrajectoryBundle {
  Trajectory nominal;
  std::vector<Trajectory> plus;
  std::vector<Trajectory> minus;
  double epsilon = 0.0;

  int state_dim() const { return static_cast<int>(nominal.states.cols()); }
  const SimGrid& grid() const { return nominal.grid; }
};

using StateField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ControlRecorder = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Classical fixed-step RK4. Throws NonFiniteState naming the first bad step.
/// `record_control`, when given, is evaluated at every grid node and stored
/// in Trajectory::controls.
Trajectory integrate(const StateField& field, const Eigen::VectorXd& x0, const SimGrid& grid,
                     const ControlRecorder& record_control = nullptr);

/// Closed-loop simulation of dx/dt = A x + B u(x) with controls recorded.
Trajectory simulate_closed_loop(const LinearSystem& sys, const Controller& ctrl,
                                const Eigen::VectorXd& x0, const SimGrid& grid);

/// The 2n+1 member bundle feeding the empirical Gramian; every member runs
/// under the same feedback, S evaluated on the member's own state.
/// Throws InvalidEpsilon when epsilon <= 0.
TrajectoryBundle simulate_bundle(const LinearSystem& sys, const Controller& ctrl,
                                 const Eigen::VectorXd& x0, double epsilon, const SimGrid& grid);

}  // namespace obsyn
