#include "obsyn/synth.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace obsyn {

namespace {

constexpr double kK2Floor = 1e-6;
constexpr double kK4Ceil = M_PI_2 - 1e-9;

// Quadratic part of Gamma and its building blocks at one state.
struct QuadForm {
  double value = 0.0;          // y'(R^{-1}+2S+SRS)y + x'Qx
  Eigen::VectorXd y;           // B'P x
  Eigen::VectorXd dg_ds;       // partial of the quadratic part w.r.t. each S_ii
  SDerivatives sd;
};

QuadForm quad_form(const Eigen::VectorXd& x, const Eigen::MatrixXd& BtP,
                   const Eigen::MatrixXd& Rinv, const Eigen::MatrixXd& R,
                   const Eigen::MatrixXd& Q, const AugmentedGains& gains) {
  QuadForm q;
  q.sd = s_matrix_derivatives(gains, x);
  q.y = BtP * x;
  const Eigen::VectorXd sy = q.sd.s.cwiseProduct(q.y);
  const Eigen::VectorXd Rsy = R * sy;
  q.value = q.y.dot(Rinv * q.y) + 2.0 * q.sd.s.dot(q.y.cwiseAbs2()) + sy.dot(Rsy) + x.dot(Q * x);
  q.dg_ds = 2.0 * q.y.cwiseAbs2() + 2.0 * q.y.cwiseProduct(Rsy);
  return q;
}

double l2_of_slice(const BundleSlice& members, const ObservationModel& h, double alpha, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < members.plus.size(); ++i) {
    if (!h.in_domain(members.plus[i]))
      throw DomainViolation(t, static_cast<int>(i) + 1, "gamma: " + h.name() + " undefined");
    if (!h.in_domain(members.minus[i]))
      throw DomainViolation(t, -(static_cast<int>(i) + 1), "gamma: " + h.name() + " undefined");
    sum += (h(members.plus[i]) - h(members.minus[i])).squaredNorm();
  }
  return std::exp(-alpha * t) / (4.0 * members.epsilon * members.epsilon) * sum;
}

}  // namespace

BundleSlice slice_at(const TrajectoryBundle& bundle, int t_index) {
  BundleSlice s;
  s.epsilon = bundle.epsilon;
  const int n = bundle.state_dim();
  s.plus.reserve(n);
  s.minus.reserve(n);
  for (int i = 0; i < n; ++i) {
    s.plus.push_back(bundle.plus[i].state_at(t_index));
    s.minus.push_back(bundle.minus[i].state_at(t_index));
  }
  return s;
}

double gamma_at(const Eigen::VectorXd& x, const BundleSlice& members, const ObservationModel& h,
                const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                const Eigen::MatrixXd& R, const AugmentedGains& gains, const CostWeights& weights,
                double t) {
  const Eigen::MatrixXd BtP = B.transpose() * P;
  const Eigen::MatrixXd Rinv =
      Eigen::LLT<Eigen::MatrixXd>(R).solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()));
  double g = quad_form(x, BtP, Rinv, R, Q, gains).value;
  if (weights.w != 0.0) g -= weights.w * l2_of_slice(members, h, weights.alpha, t);
  return g;
}

namespace detail {

CostEvaluation evaluate_cost_detailed(const SynthesisProblem& problem, const AugmentedGains& gains,
                                      const CostWeights& weights) {
  const Controller ctrl = Controller::augmented(problem.P, problem.R, problem.system.B(), gains);
  const TrajectoryBundle bundle =
      simulate_bundle(problem.system, ctrl, problem.x0, problem.epsilon, problem.grid);

  const int steps = problem.grid.step_count();
  const double dt = problem.grid.dt();
  const Eigen::MatrixXd BtP = ctrl.BtP();
  const Eigen::MatrixXd& Rinv = ctrl.R_inverse();

  CostEvaluation ev;
  ev.margin_trace.resize(steps + 1);
  double J = 0.0, l1I = 0.0, l2I = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double wq = (k == 0 || k == steps) ? 0.5 : 1.0;
    const Eigen::VectorXd x = bundle.nominal.state_at(k);
    const Eigen::VectorXd u = bundle.nominal.control_at(k);
    const double l1 = l1_at(x, u, problem.Q, problem.R);
    const double l2 = l2_at(k, bundle, problem.observation, weights);
    const double gamma = quad_form(x, BtP, Rinv, problem.R, problem.Q, gains).value -
                         weights.w * l2;
    J += wq * dt * gamma;
    l1I += wq * dt * l1;
    l2I += wq * dt * l2;
    ev.margin_trace(k) = l1 - weights.w * l2;
  }
  ev.breakdown.J = J;
  ev.breakdown.l1_integral = l1I;
  ev.breakdown.l2_integral = l2I;
  ev.breakdown.positivity_margin = ev.margin_trace.minCoeff();
  return ev;
}

}  // namespace detail

CostBreakdown evaluate_cost(const SynthesisProblem& problem, const AugmentedGains& gains,
                            const CostWeights& weights) {
  return detail::evaluate_cost_detailed(problem, gains, weights).breakdown;
}

namespace {

// Joint integration of the 2n+1 members with (optionally) their sensitivity
// blocks dx/d(k1..k4), sharing RK4 stages, plus the trapezoid-accumulated cost
// row and its gradient. Member order: nominal, plus[0..n), minus[0..n).
struct AugmentedRun {
  double J = 0.0;
  Eigen::VectorXd gradient;
};

AugmentedRun run_augmented(const SynthesisProblem& problem, const AugmentedGains& gains,
                           const CostWeights& weights, bool with_gradient) {
  const int n = problem.system.n();
  const int p = problem.system.p();
  const int np = 4 * p;
  const int steps = problem.grid.step_count();
  const double dt = problem.grid.dt();
  const Eigen::MatrixXd& A = problem.system.A();
  const Eigen::MatrixXd& B = problem.system.B();
  const Eigen::MatrixXd BtP = B.transpose() * problem.P;
  const Eigen::MatrixXd Rinv = Eigen::LLT<Eigen::MatrixXd>(problem.R).solve(
      Eigen::MatrixXd::Identity(p, p));
  const ObservationModel& h = problem.observation;
  const double inv4e2 = 1.0 / (4.0 * problem.epsilon * problem.epsilon);

  const int members = 2 * n + 1;
  std::vector<Eigen::VectorXd> xs(members);
  std::vector<Eigen::MatrixXd> Xs(members, Eigen::MatrixXd::Zero(n, np));
  xs[0] = problem.x0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = problem.epsilon;
    xs[1 + i] = problem.x0 + e;
    xs[1 + n + i] = problem.x0 - e;
  }

  // Closed-loop field and, when needed, its state Jacobian and gain partials.
  auto field = [&](const Eigen::VectorXd& x, Eigen::VectorXd& fx) {
    const SDerivatives sd = s_matrix_derivatives(gains, x);
    const Eigen::VectorXd y = BtP * x;
    fx = A * x - B * (Rinv * y + sd.s.cwiseProduct(y));
  };
  auto field_with_sens = [&](const Eigen::VectorXd& x, const Eigen::MatrixXd& X,
                             Eigen::VectorXd& fx, Eigen::MatrixXd& FX) {
    const SDerivatives sd = s_matrix_derivatives(gains, x);
    const Eigen::VectorXd y = BtP * x;
    fx = A * x - B * (Rinv * y + sd.s.cwiseProduct(y));
    Eigen::MatrixXd Jf = A - B * (Rinv + Eigen::MatrixXd(sd.s.asDiagonal())) * BtP;
    const double r = x.norm();
    if (r > 0.0) Jf.noalias() -= B * (y.cwiseProduct(sd.ds_dr) * (x.transpose() / r));
    Eigen::MatrixXd Fk(n, np);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < p; ++i) Fk.col(j * p + i) = -B.col(i) * (sd.ds_dk(i, j) * y(i));
    FX = Jf * X + Fk;
  };

  AugmentedRun out;
  out.gradient = Eigen::VectorXd::Zero(np);

  for (int k = 0; k <= steps; ++k) {
    const double wq = ((k == 0 || k == steps) ? 0.5 : 1.0) * dt;
    const double t = problem.grid.time(k);

    // Cost row (and its gradient) at this node.
    const QuadForm q = quad_form(xs[0], BtP, Rinv, problem.R, problem.Q, gains);
    double gamma = q.value;
    Eigen::VectorXd node_grad;
    if (with_gradient) {
      // d(quadratic)/dx through both the explicit x and S(||x||).
      const Eigen::VectorXd My =
          Rinv * q.y + 2.0 * q.sd.s.cwiseProduct(q.y) +
          q.sd.s.cwiseProduct(problem.R * q.sd.s.cwiseProduct(q.y));
      Eigen::VectorXd gx = 2.0 * (BtP.transpose() * My) + 2.0 * (problem.Q * xs[0]);
      const double r = xs[0].norm();
      if (r > 0.0) gx += q.dg_ds.dot(q.sd.ds_dr) * (xs[0] / r);
      node_grad = Xs[0].transpose() * gx;
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < p; ++i) node_grad(j * p + i) += q.dg_ds(i) * q.sd.ds_dk(i, j);
    }
    if (weights.w != 0.0) {
      const double c = std::exp(-weights.alpha * t) * inv4e2;
      double l2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd& xp = xs[1 + i];
        const Eigen::VectorXd& xm = xs[1 + n + i];
        if (!h.in_domain(xp)) throw DomainViolation(t, i + 1, "sensitivity: " + h.name() + " undefined");
        if (!h.in_domain(xm)) throw DomainViolation(t, -(i + 1), "sensitivity: " + h.name() + " undefined");
        const Eigen::VectorXd d = h(xp) - h(xm);
        l2 += d.squaredNorm();
        if (with_gradient) {
          const Eigen::VectorXd gp = -weights.w * c * 2.0 * (h.jacobian(xp).transpose() * d);
          const Eigen::VectorXd gm = weights.w * c * 2.0 * (h.jacobian(xm).transpose() * d);
          node_grad += Xs[1 + i].transpose() * gp + Xs[1 + n + i].transpose() * gm;
        }
      }
      gamma -= weights.w * c * l2;
    }
    out.J += wq * gamma;
    if (with_gradient) out.gradient += wq * node_grad;

    if (k == steps) break;

    for (int m = 0; m < members; ++m) {
      if (!with_gradient) {
        Eigen::VectorXd f1, f2, f3, f4;
        field(xs[m], f1);
        field(xs[m] + 0.5 * dt * f1, f2);
        field(xs[m] + 0.5 * dt * f2, f3);
        field(xs[m] + dt * f3, f4);
        xs[m] += dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
      } else {
        Eigen::VectorXd f1, f2, f3, f4;
        Eigen::MatrixXd G1, G2, G3, G4;
        field_with_sens(xs[m], Xs[m], f1, G1);
        field_with_sens(xs[m] + 0.5 * dt * f1, Xs[m] + 0.5 * dt * G1, f2, G2);
        field_with_sens(xs[m] + 0.5 * dt * f2, Xs[m] + 0.5 * dt * G2, f3, G3);
        field_with_sens(xs[m] + dt * f3, Xs[m] + dt * G3, f4, G4);
        xs[m] += dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        Xs[m] += dt / 6.0 * (G1 + 2.0 * G2 + 2.0 * G3 + G4);
      }
      if (!xs[m].allFinite())
        throw NonFiniteState("augmented integration: member " + std::to_string(m) +
                             " non-finite at step " + std::to_string(k + 1));
    }
  }
  return out;
}

}  // namespace

double cost_from_augmented_state(const SynthesisProblem& problem, const AugmentedGains& gains,
                                 const CostWeights& weights) {
  return run_augmented(problem, gains, weights, false).J;
}

Eigen::VectorXd sensitivity_gradient(const SynthesisProblem& problem, const AugmentedGains& gains,
                                     const CostWeights& weights) {
  return run_augmented(problem, gains, weights, true).gradient;
}

double estimate_lipschitz(const ObservationModel& h, const TrajectoryBundle& bundle) {
  double max_sigma = 0.0;
  auto scan = [&](const Trajectory& traj, int member) {
    for (int k = 0; k <= traj.grid.step_count(); ++k) {
      const Eigen::VectorXd x = traj.state_at(k);
      if (!h.in_domain(x))
        throw DomainViolation(traj.grid.time(k), member,
                              "estimate_lipschitz: " + h.name() + " undefined");
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.jacobian(x));
      max_sigma = std::max(max_sigma, svd.singularValues()(0));
    }
  };
  scan(bundle.nominal, 0);
  for (std::size_t i = 0; i < bundle.plus.size(); ++i) {
    scan(bundle.plus[i], static_cast<int>(i) + 1);
    scan(bundle.minus[i], -(static_cast<int>(i) + 1));
  }
  if (max_sigma == 0.0)
    throw DegenerateObservation("estimate_lipschitz: observation carries no information");
  return 1.2 * max_sigma;
}

WeightSelection select_weights(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x0, double L,
                               const DecayEnvelope& envelope) {
  if (x0.norm() == 0.0)
    throw ZeroInitialState("select_weights: the w bound degenerates at x0 = 0");
  if (!(L > 0.0)) throw std::invalid_argument("select_weights: L must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()));
  const double lam_min = es.eigenvalues().minCoeff();
  const double n = static_cast<double>(x0.size());
  WeightSelection sel;
  sel.L = L;
  sel.envelope = envelope;
  sel.w = lam_min * x0.squaredNorm() / (n * L * L * envelope.K * envelope.K);
  sel.alpha = std::max(0.0, envelope.sigma_max_squared - 2.0 * envelope.a);
  sel.update_count = 0;
  return sel;
}

WeightSelection monitor_and_update(const Eigen::VectorXd& margin_trace, const SimGrid& grid,
                                   WeightSelection selection) {
  int first_violation = -1;
  for (int k = 0; k < margin_trace.size(); ++k) {
    if (margin_trace(k) < 0.0) {
      first_violation = k;
      break;
    }
  }
  if (first_violation < 0) return selection;
  // A violation at t = 0 uses one grid step as the update scale.
  const double t_star = std::max(grid.time(first_violation), grid.dt());
  selection.w *= 0.5;
  selection.alpha += std::log(2.0) / t_star;
  selection.update_count += 1;
  return selection;
}

detail::CostEvaluation evaluate_cost_monitored(const SynthesisProblem& problem,
                                               const AugmentedGains& gains,
                                               WeightSelection& selection) {
  for (int round = 0; round <= 20; ++round) {
    detail::CostEvaluation ev = detail::evaluate_cost_detailed(problem, gains, selection.weights());
    if (ev.breakdown.positivity_margin >= 0.0) return ev;
    if (round == 20) break;
    selection = monitor_and_update(ev.margin_trace, problem.grid, selection);
  }
  throw MonitorDiverged("evaluate_cost_monitored: l1 - w*l2 still negative after 20 updates");
}

namespace {

Eigen::VectorXd project_gains(Eigen::VectorXd theta, int p) {
  for (int i = 0; i < p; ++i) {
    theta(i) = std::max(theta(i), 0.0);                      // k1 >= 0
    theta(p + i) = std::max(theta(p + i), kK2Floor);         // k2 > 0
    theta(3 * p + i) = std::clamp(theta(3 * p + i), 0.0, kK4Ceil);  // k4 in [0, pi/2)
  }
  return theta;
}

}  // namespace

OptimizeResult optimize_gains(const SynthesisProblem& problem, const WeightSelection& weights,
                              const AugmentedGains& init, const OptimizeOptions& options) {
  init.validate();
  const int p = problem.system.p();

  OptimizeResult result;
  result.weights = weights;
  Eigen::VectorXd theta = project_gains(init.flatten(), p);

  detail::CostEvaluation current =
      evaluate_cost_monitored(problem, AugmentedGains::unflatten(theta, p), result.weights);
  result.log.push_back({0, current.breakdown.J, 0.0, 0.0, result.weights.w, result.weights.alpha});

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    const Eigen::VectorXd g = sensitivity_gradient(
        problem, AugmentedGains::unflatten(theta, p), result.weights.weights());
    const double projected_norm = (theta - project_gains(theta - g, p)).norm();
    result.log.back().gradient_norm = projected_norm;
    if (projected_norm < options.grad_tol) break;

    double step = options.initial_step;
    bool accepted = false;
    const double g2 = g.squaredNorm();
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      const Eigen::VectorXd cand = project_gains(theta - step * g, p);
      const CostBreakdown cb = evaluate_cost(
          problem, AugmentedGains::unflatten(cand, p), result.weights.weights());
      if (cb.J <= current.breakdown.J - options.armijo_c * step * g2) {
        theta = cand;
        // Re-monitor the accepted point; a weight update re-bases the cost.
        current = evaluate_cost_monitored(problem, AugmentedGains::unflatten(theta, p),
                                          result.weights);
        result.log.push_back({iter, current.breakdown.J, 0.0, step, result.weights.w,
                              result.weights.alpha});
        accepted = true;
        break;
      }
      step *= options.shrink;
    }
    if (!accepted)
      throw LineSearchStalled("optimize_gains: no decrease after " +
                              std::to_string(options.max_backtracks) + " backtracking steps");
  }

  result.gains = AugmentedGains::unflatten(theta, p);
  result.cost = current.breakdown;
  return result;
}

}  // namespace obsyn
