#include "pglim/hard_instances.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "pglim/errors.hpp"

namespace pglim {

StateSpaceSystem perturb_system(const StateSpaceSystem& S1,
                                const Controller& K_star,
                                const Perturbation& delta) {
  validate_system(S1);
  validate_controller(K_star, S1.dx(), S1.du());
  if (delta.Delta.rows() != S1.dx() || delta.Delta.cols() != S1.du()) {
    throw DimensionError("perturb_system: Delta must be d_x x d_u");
  }
  StateSpaceSystem S2;
  S2.A = S1.A - delta.Delta * K_star.K;
  S2.B = S1.B + delta.Delta;
  S2.SigmaW = S1.SigmaW;
  return S2;
}

Eigen::MatrixXd perturbed_gradient_closed_form(const StateSpaceSystem& S1,
                                               const CostSpec& cost,
                                               const Perturbation& delta) {
  DareSolution opt = solve_dare_optimal(S1, cost);
  ValueMatrix P = solve_lyapunov_value(S1, cost, opt.K);
  Gramian G = closed_loop_gramian(S1, opt.K);
  Eigen::MatrixXd acl = closed_loop(S1, opt.K);
  return 2.0 * delta.Delta.transpose() * P.P * acl * G.Gamma;
}

double kl_state_trajectories_exact(const StateSpaceSystem& S1,
                                   const StateSpaceSystem& S2,
                                   const ExplorationPolicy& policy,
                                   const ExperimentBudget& budget) {
  validate_system(S1);
  validate_budget(budget);
  validate_policy(policy, S1.dx(), S1.du());
  if (S2.A.rows() != S1.A.rows() || S2.B.cols() != S1.B.cols()) {
    throw DimensionError("kl_state_trajectories_exact: system shapes differ");
  }
  if ((S1.SigmaW - S2.SigmaW).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + S1.SigmaW.cwiseAbs().maxCoeff())) {
    throw ValidationError(
        "kl_state_trajectories_exact: systems must share the noise covariance");
  }
  Eigen::LLT<Eigen::MatrixXd> noise(symmetrize(S1.SigmaW));
  if (noise.info() != Eigen::Success) {
    throw SingularNoise(
        "kl_state_trajectories_exact: SigmaW must be positive definite");
  }
  Eigen::MatrixXd acl = S1.A + S1.B * policy.feedback.K;
  if (spectral_radius(acl) >= 1.0 - kStabilityMargin) {
    throw UnstableClosedLoop(
        "kl_state_trajectories_exact: policy does not stabilize S1");
  }

  // Mean difference per transition: M x_t + D_B eta_t with M collecting the
  // feedback part.
  Eigen::MatrixXd db = S1.B - S2.B;
  Eigen::MatrixXd M = (S1.A - S2.A) + db * policy.feedback.K;
  Eigen::MatrixXd kernel = noise.solve(
      Eigen::MatrixXd::Identity(S1.dx(), S1.dx()));  // SigmaW^{-1}
  Eigen::MatrixXd excitation_term =
      db * policy.excitation_cov * db.transpose();
  double excitation_kl = 0.5 * (kernel * excitation_term).trace();

  Eigen::MatrixXd input_cov =
      S1.B * policy.excitation_cov * S1.B.transpose() + S1.SigmaW;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(S1.dx(), S1.dx());
  double per_trajectory = 0.0;
  for (long t = 0; t < budget.T; ++t) {
    per_trajectory +=
        0.5 * (kernel * (M * X * M.transpose())).trace() + excitation_kl;
    X = symmetrize(acl * X * acl.transpose() + input_cov);
  }
  return static_cast<double>(budget.N) * per_trajectory;
}

double le_cam_two_point(double gap_delta, double kl) {
  if (gap_delta < 0.0 || kl < 0.0 || std::isnan(gap_delta) || std::isnan(kl)) {
    throw ValidationError("le_cam_two_point: arguments must be nonnegative");
  }
  if (gap_delta == 0.0 || kl >= 2.0) return 0.0;
  return std::max(0.0, 0.5 * gap_delta * (1.0 - std::sqrt(0.5 * kl)));
}

LowerBoundCertificate lower_bound_theorem1(const StateSpaceSystem& S1,
                                           const CostSpec& cost,
                                           const Perturbation& delta,
                                           const ExplorationPolicy& policy,
                                           const ExperimentBudget& budget) {
  DareSolution opt = solve_dare_optimal(S1, cost);
  ValueMatrix P = solve_lyapunov_value(S1, cost, opt.K);
  Gramian G = closed_loop_gramian(S1, opt.K);
  Eigen::MatrixXd acl = closed_loop(S1, opt.K);

  LowerBoundCertificate out;
  out.delta_used = delta;
  out.gradient_gap =
      operator_norm(2.0 * delta.Delta.transpose() * P.P * acl * G.Gamma);
  StateSpaceSystem S2 = perturb_system(S1, opt.K, delta);
  out.kl_value = kl_state_trajectories_exact(S1, S2, policy, budget);
  out.vacuous = out.kl_value >= 2.0;
  out.bound_value = le_cam_two_point(out.gradient_gap, out.kl_value);
  return out;
}

ExplorationPolicy budget_normalized_policy(const StateSpaceSystem& S,
                                           const CostSpec& cost,
                                           const ExperimentBudget& budget) {
  validate_budget(budget);
  DareSolution opt = solve_dare_optimal(S, cost);
  Gramian G = closed_loop_gramian(S, opt.K);
  Eigen::MatrixXd acl = closed_loop(S, opt.K);
  // Unit-excitation state covariance: W = acl W acl' + B B'.
  Eigen::MatrixXd W = solve_discrete_lyapunov(acl, S.B * S.B.transpose());
  double feedback_energy = (opt.K.K * G.Gamma * opt.K.K.transpose()).trace();
  double per_unit = (opt.K.K * W * opt.K.K.transpose()).trace() + S.du();
  double scale = std::max(0.0, (budget.beta - feedback_energy) / per_unit);
  ExplorationPolicy policy;
  policy.feedback = opt.K;
  policy.excitation_cov =
      scale * Eigen::MatrixXd::Identity(S.du(), S.du());
  return policy;
}

double kl_budget_upper_bound(double delta, const ExperimentBudget& budget,
                             double gamma) {
  return delta * delta * budget.nt() * (gamma + budget.beta);
}

ScalarCertificate scalar_lower_bound(double a, double b, double q, double r,
                                     double sigma_w_var,
                                     const ExperimentBudget& budget) {
  if (b == 0.0 && std::abs(a) >= 1.0 - kStabilityMargin) {
    throw NotStabilizable("scalar_lower_bound: b = 0 with |a| >= 1");
  }
  StateSpaceSystem S = make_scalar_system(a, b, sigma_w_var);
  CostSpec cost = make_scalar_cost(q, r);

  DareSolution opt = solve_dare_optimal(S, cost);
  Gramian G = closed_loop_gramian(S, opt.K);

  ScalarCertificate out;
  out.k_star = opt.K.K(0, 0);
  out.p_star = opt.P.P(0, 0);
  out.gamma = G.Gamma(0, 0);
  out.closed_loop = a + b * out.k_star;
  out.delta = 1.0 / std::sqrt(2.0 * budget.nt() * (out.gamma + budget.beta));
  out.closed_form_value =
      std::abs(out.p_star * out.closed_loop * out.gamma) /
      std::sqrt(budget.nt() * (budget.beta + out.gamma));
  out.kl_upper = kl_budget_upper_bound(out.delta, budget, out.gamma);

  Perturbation delta{Eigen::MatrixXd::Constant(1, 1, out.delta)};
  ExplorationPolicy policy = budget_normalized_policy(S, cost, budget);
  out.cert = lower_bound_theorem1(S, cost, delta, policy, budget);
  return out;
}

LowerBoundCertificate corollary_nullspace_bound(const StateSpaceSystem& S1,
                                                const CostSpec& cost,
                                                const ExperimentBudget& budget,
                                                const Perturbation& delta,
                                                double epsilon) {
  validate_budget(budget);
  DareSolution opt = solve_dare_optimal(S1, cost);
  double scale = 1.0 + operator_norm(delta.Delta) * operator_norm(opt.K.K);
  if (operator_norm(delta.Delta * opt.K.K) > 1e-8 * scale) {
    throw NullspaceViolation(
        "corollary_nullspace_bound: Delta K_star must vanish");
  }
  if (operator_norm(delta.Delta) > 1.0 + 1e-9) {
    throw ValidationError(
        "corollary_nullspace_bound: Delta must have operator norm at most 1");
  }
  Perturbation scaled{epsilon / std::sqrt(budget.total_energy()) * delta.Delta};
  ExplorationPolicy policy = budget_normalized_policy(S1, cost, budget);
  return lower_bound_theorem1(S1, cost, scaled, policy, budget);
}

IntegratorChain make_integrator_chain(int dx, double rho) {
  if (dx < 3) {
    throw ValidationError("make_integrator_chain: dx must be at least 3");
  }
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ValidationError("make_integrator_chain: rho must lie in (0, 1)");
  }
  const int d0 = dx - 1;

  IntegratorChain chain;
  chain.A0 = Eigen::MatrixXd::Zero(d0, d0);
  for (int i = 0; i < d0; ++i) {
    chain.A0(i, i) = rho;
    if (i + 1 < d0) chain.A0(i, i + 1) = 2.0;
  }
  chain.B0 = Eigen::MatrixXd::Zero(d0, 1);
  chain.B0(d0 - 1, 0) = 1.0;
  chain.cost0.Q = Eigen::MatrixXd::Identity(d0, d0);
  chain.cost0.R = Eigen::MatrixXd::Identity(1, 1);

  chain.system.A = Eigen::MatrixXd::Zero(dx, dx);
  chain.system.A.bottomRightCorner(d0, d0) = chain.A0;
  chain.system.B = Eigen::MatrixXd::Zero(dx, 2);
  chain.system.B(0, 0) = 1.0;
  chain.system.B(dx - 1, 1) = 1.0;
  chain.system.SigmaW = Eigen::MatrixXd::Identity(dx, dx);
  chain.cost.Q = Eigen::MatrixXd::Identity(dx, dx);
  chain.cost.R = Eigen::MatrixXd::Identity(2, 2);

  chain.delta_template.Delta = Eigen::MatrixXd::Zero(dx, 2);
  return chain;
}

Perturbation chain_perturbation(const IntegratorChain& chain,
                                const Eigen::VectorXd& delta1) {
  const int dx = chain.system.dx();
  if (delta1.size() != dx - 1) {
    throw DimensionError("chain_perturbation: delta1 must have length dx - 1");
  }
  Perturbation delta = chain.delta_template;
  delta.Delta.col(0).tail(dx - 1) = delta1;
  return delta;
}

double riccati_growth_check(int dx, double rho) {
  IntegratorChain chain = make_integrator_chain(dx, rho);
  StateSpaceSystem sub{chain.A0, chain.B0,
                       Eigen::MatrixXd::Identity(dx - 1, dx - 1)};
  DareSolution opt = solve_dare_optimal(sub, chain.cost0);
  double value =
      (chain.B0.transpose() * opt.P.P * chain.B0)(0, 0) + chain.cost0.R(0, 0);
  double floor = std::pow(2.0, 2.0 * dx - 4.0) + 1.0;
  if (value < floor) {
    throw Error("riccati_growth_check: value " + std::to_string(value) +
                " fell below the exponential floor " + std::to_string(floor));
  }
  return value;
}

CurseCertificate dimension_curse_bound(int dx, double rho,
                                       const ExperimentBudget& budget) {
  IntegratorChain chain = make_integrator_chain(dx, rho);
  StateSpaceSystem sub{chain.A0, chain.B0,
                       Eigen::MatrixXd::Identity(dx - 1, dx - 1)};
  DareSolution opt0 = solve_dare_optimal(sub, chain.cost0);
  Eigen::MatrixXd M0 = opt0.P.P * (chain.A0 + chain.B0 * opt0.K.K);

  CurseCertificate out;
  out.delta1 = top_left_singular_vector(M0);
  out.subsystem_gap = (out.delta1.transpose() * M0).norm();
  out.riccati_value =
      (chain.B0.transpose() * opt0.P.P * chain.B0)(0, 0) + chain.cost0.R(0, 0);
  if (dx >= 6 && out.subsystem_gap < 0.4 * out.riccati_value) {
    throw Error("dimension_curse_bound: subsystem gap " +
                std::to_string(out.subsystem_gap) +
                " below 0.4 * " + std::to_string(out.riccati_value));
  }
  Perturbation delta = chain_perturbation(chain, out.delta1);
  out.cert = corollary_nullspace_bound(chain.system, chain.cost, budget, delta);
  return out;
}

std::vector<TwoScalarRow> two_scalar_demo(double a, double b,
                                          const std::vector<double>& k_grid) {
  if (std::abs(a) <= 1.0) {
    throw ValidationError("two_scalar_demo: requires |a| > 1");
  }
  if (b == 0.0) {
    throw ValidationError("two_scalar_demo: requires b != 0");
  }
  const double inf = std::numeric_limits<double>::infinity();
  CostSpec cost = make_scalar_cost(1.0, 1.0);
  StateSpaceSystem s1 = make_scalar_system(a, b, 1.0);
  StateSpaceSystem s2 = make_scalar_system(a, -b, 1.0);

  std::vector<TwoScalarRow> rows;
  rows.reserve(k_grid.size());
  for (double k : k_grid) {
    Controller K{Eigen::MatrixXd::Constant(1, 1, k)};
    TwoScalarRow row;
    row.k = k;
    row.s1_stable = is_stabilizing(K, s1);
    row.s2_stable = is_stabilizing(K, s2);
    row.j1 = row.s1_stable ? lqr_cost(s1, cost, K) : inf;
    row.j2 = row.s2_stable ? lqr_cost(s2, cost, K) : inf;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pglim
