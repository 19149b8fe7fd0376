#pragma once

#include <Eigen/Dense>
#include <vector>

#include "obsyn/linalg.hpp"
#include "obsyn/model.hpp"
#include "obsyn/obsgram.hpp"
#include "obsyn/sim.hpp"

namespace obsyn {

/// Everything one synthesis run needs: plant, LQR design (Q, R) with its
/// Riccati solution P, the observation map, and the bundle parameters.
struct SynthesisProblem {
  LinearSystem system;
  Eigen::MatrixXd Q, R, P;
  ObservationModel observation;
  Eigen::VectorXd x0;
  double epsilon;
  SimGrid grid;
};

/// J = integral of (l1 - w*l2) split into its parts. positivity_margin is
/// min over grid nodes of l1 - w*l2, the Theorem-2 monitor quantity.
struct CostBreakdown {
  double J = 0.0;
  double l1_integral = 0.0;
  double l2_integral = 0.0;
  double positivity_margin = 0.0;
};

/// Observability weights chosen per the Theorem-2 bounds, with the constants
/// that backed them and the number of monitor-driven updates applied since.
struct WeightSelection {
  double w = 0.0;
  double alpha = 0.0;
  double L = 0.0;          // Lipschitz estimate of the observation map
  DecayEnvelope envelope;
  int update_count = 0;

  CostWeights weights() const { return {w, alpha}; }
};

/// One time-slice of a bundle's perturbed members (plus/minus states).
struct BundleSlice {
  std::vector<Eigen::VectorXd> plus, minus;
  double epsilon = 0.0;
};
BundleSlice slice_at(const TrajectoryBundle& bundle, int t_index);

/// The reduced integrand after substituting the augmented feedback:
/// Gamma = x'(PB(R^{-1} + 2S + SRS)B'P + Q)x - w*l2, S = S(x).
double gamma_at(const Eigen::VectorXd& x, const BundleSlice& members, const ObservationModel& h,
                const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                const Eigen::MatrixXd& R, const AugmentedGains& gains, const CostWeights& weights,
                double t);

/// Simulates the bundle under the augmented feedback and integrates Gamma by
/// composite trapezoid on the grid.
CostBreakdown evaluate_cost(const SynthesisProblem& problem, const AugmentedGains& gains,
                            const CostWeights& weights);

namespace detail {
/// CostBreakdown plus the per-node l1 - w*l2 trace the monitor consumes.
struct CostEvaluation {
  CostBreakdown breakdown;
  Eigen::VectorXd margin_trace;
};
CostEvaluation evaluate_cost_detailed(const SynthesisProblem& problem, const AugmentedGains& gains,
                                      const CostWeights& weights);
}  // namespace detail

/// J recomputed through the augmented-state route: the stacked 2n+1 member
/// ODE advanced by RK4 with the running cost accumulated alongside, returning
/// the cost state at tf. Agrees with evaluate_cost to quadrature consistency.
double cost_from_augmented_state(const SynthesisProblem& problem, const AugmentedGains& gains,
                                 const CostWeights& weights);

/// L = 1.2 * max sigma_max(J_h) over every state of every bundle member.
/// Throws DegenerateObservation when the Jacobian vanishes identically.
double estimate_lipschitz(const ObservationModel& h, const TrajectoryBundle& bundle);

/// Theorem-2 selection: w = lambda_min(Q) ||x0||^2 / (n L^2 K^2) and
/// alpha = max(0, sigma_max(Abar)^2 - 2a). Throws ZeroInitialState.
WeightSelection select_weights(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x0, double L,
                               const DecayEnvelope& envelope);

/// Positivity monitor: returns the selection unchanged when the margin trace
/// stays nonnegative; otherwise halves w and adds ln(2)/t* to alpha, where t*
/// is the first violation time (floored at one grid step).
WeightSelection monitor_and_update(const Eigen::VectorXd& margin_trace, const SimGrid& grid,
                                   WeightSelection selection);

/// Evaluate-and-monitor loop: re-evaluates with updated weights until the
/// margin is nonnegative, up to 20 rounds. Throws MonitorDiverged.
detail::CostEvaluation evaluate_cost_monitored(const SynthesisProblem& problem,
                                               const AugmentedGains& gains,
                                               WeightSelection& selection);

/// dJ/d(k1..k4) via the sensitivity equations: the member variational ODEs
/// integrated by RK4 on the same grid (shared stages with the states), with
/// the cost row accumulated by the same trapezoid rule as evaluate_cost.
/// Layout matches AugmentedGains::flatten(): [k1; k2; k3; k4].
Eigen::VectorXd sensitivity_gradient(const SynthesisProblem& problem, const AugmentedGains& gains,
                                     const CostWeights& weights);

struct OptimizeOptions {
  int max_iters = 200;
  double initial_step = 1e-2;
  double shrink = 0.5;
  double armijo_c = 1e-4;
  double grad_tol = 1e-6;
  int max_backtracks = 40;
};

struct IterationRecord {
  int iteration = 0;
  double J = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
  double w = 0.0;
  double alpha = 0.0;
};

struct OptimizeResult {
  AugmentedGains gains;
  CostBreakdown cost;
  std::vector<IterationRecord> log;
  WeightSelection weights;
};

/// Projected gradient descent over the 4p gain parameters with Armijo
/// backtracking. Projection: k1 >= 0, k2 >= 1e-6, k4 in [0, pi/2); k3 free.
/// Weights are re-monitored at every accepted step.
/// Throws LineSearchStalled after max_backtracks consecutive shrinks and
/// propagates MonitorDiverged.
OptimizeResult optimize_gains(const SynthesisProblem& problem, const WeightSelection& weights,
                              const AugmentedGains& init, const OptimizeOptions& options = {});

}  // namespace obsyn
