#include "pglim/partial_obs.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "pglim/errors.hpp"

namespace pglim {

namespace {

Eigen::LLT<Eigen::MatrixXd> output_innovation_llt(const OutputSystem& G,
                                                  const Eigen::MatrixXd& F) {
  Eigen::LLT<Eigen::MatrixXd> llt(
      symmetrize(G.C * F * G.C.transpose() + G.SigmaV));
  if (llt.info() != Eigen::Success) {
    throw SingularNoise("filter: C F C' + SigmaV is not positive definite");
  }
  return llt;
}

}  // namespace

Eigen::MatrixXd filter_riccati_step(const OutputSystem& G,
                                    const Eigen::MatrixXd& F) {
  if (F.rows() != G.dx() || F.cols() != G.dx()) {
    throw DimensionError("filter_riccati_step: F must be d_x x d_x");
  }
  auto llt = output_innovation_llt(G, F);
  Eigen::MatrixXd AFC = G.A * F * G.C.transpose();
  return symmetrize(G.SigmaW + G.A * F * G.A.transpose() -
                    AFC * llt.solve(AFC.transpose()));
}

Eigen::MatrixXd filter_gain(const OutputSystem& G, const Eigen::MatrixXd& F) {
  if (F.rows() != G.dx() || F.cols() != G.dx()) {
    throw DimensionError("filter_gain: F must be d_x x d_x");
  }
  auto llt = output_innovation_llt(G, F);
  return llt.solve(G.C * F).transpose();
}

Eigen::MatrixXd innovation_covariance(const OutputSystem& G,
                                      const Eigen::MatrixXd& F,
                                      const Eigen::MatrixXd& L) {
  if (L.rows() != G.dx() || L.cols() != G.dy()) {
    throw DimensionError("innovation_covariance: L must be d_x x d_y");
  }
  Eigen::MatrixXd S = symmetrize(G.C * F * G.C.transpose() + G.SigmaV);
  return symmetrize(L * S * L.transpose());
}

SteadyStateFilter steady_state_filter(const OutputSystem& G, double tol,
                                      long max_iters) {
  validate_output_system(G);
  Eigen::MatrixXd F = symmetrize(G.SigmaW);
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd next = filter_riccati_step(G, F);
    residual = (next - F).norm() / (1.0 + next.norm());
    F = next;
    if (!F.allFinite() || F.norm() > 1e140) {
      throw NonConvergence(
          "steady_state_filter: iterates diverge (pair not detectable?)");
    }
    if (residual <= tol) break;
  }
  if (residual > tol) {
    throw NonConvergence("steady_state_filter: iteration cap reached");
  }
  SteadyStateFilter out;
  out.F = F;
  out.L = filter_gain(G, F);
  out.SigmaNu = innovation_covariance(G, F, out.L);
  if (spectral_radius(G.A - G.A * out.L * G.C) >= 1.0) {
    throw NonConvergence("steady_state_filter: predictor loop is unstable");
  }
  return out;
}

StateSpaceSystem filter_reduction(const OutputSystem& G) {
  SteadyStateFilter filter = steady_state_filter(G);
  return StateSpaceSystem{G.A, G.B, filter.SigmaNu};
}

double restricted_cost(const OutputSystem& G, const CostSpec& cost,
                       const Controller& K) {
  SteadyStateFilter filter = steady_state_filter(G);
  StateSpaceSystem reduction{G.A, G.B, filter.SigmaNu};
  ValueMatrix P = solve_lyapunov_value(reduction, cost, K);
  double constant = (cost.Q * (Eigen::MatrixXd::Identity(G.dx(), G.dx()) -
                               filter.L * G.C))
                        .trace();
  return (P.P * filter.SigmaNu).trace() + constant;
}

Eigen::MatrixXd restricted_policy_gradient(const OutputSystem& G,
                                           const CostSpec& cost,
                                           const Controller& K) {
  StateSpaceSystem reduction = filter_reduction(G);
  return exact_policy_gradient(reduction, cost, K);
}

Gramian innovation_gramian(const OutputSystem& G, const Controller& K,
                           double tol) {
  StateSpaceSystem reduction = filter_reduction(G);
  if (!is_stabilizing(K, reduction)) {
    throw UnstableClosedLoop("innovation_gramian: K is not stabilizing");
  }
  return Gramian{
      solve_discrete_lyapunov(closed_loop(reduction, K), reduction.SigmaW, tol)};
}

LowerBoundCertificate lower_bound_theorem2(const OutputSystem& G1,
                                           const CostSpec& cost,
                                           const Perturbation& delta,
                                           const ExplorationPolicy& policy,
                                           const ExperimentBudget& budget) {
  StateSpaceSystem reduction = filter_reduction(G1);
  if (!is_pd(reduction.SigmaW)) {
    throw SingularNoise(
        "lower_bound_theorem2: innovation covariance is singular");
  }
  return lower_bound_theorem1(reduction, cost, delta, policy, budget);
}

AlmostScalarPo make_almost_scalar_po(double a, double b, double c) {
  AlmostScalarPo out;
  out.system.A = Eigen::MatrixXd::Constant(1, 1, a);
  out.system.B = Eigen::MatrixXd::Zero(1, 2);
  out.system.B(0, 0) = b;
  out.system.C = Eigen::MatrixXd::Constant(1, 1, c);
  out.system.SigmaW = Eigen::MatrixXd::Identity(1, 1);
  out.system.SigmaV = Eigen::MatrixXd::Identity(1, 1);
  out.cost.Q = Eigen::MatrixXd::Identity(1, 1);
  out.cost.R = Eigen::MatrixXd::Identity(2, 2);
  return out;
}

ScalarPoCertificate scalar_po_bound(double a, double b, double c,
                                    const ExperimentBudget& budget) {
  if (b == 0.0 && std::abs(a) >= 1.0 - kStabilityMargin) {
    throw NotStabilizable("scalar_po_bound: b = 0 with |a| >= 1");
  }
  validate_budget(budget);
  constexpr double q = 1.0, r = 1.0, sw = 1.0, sv = 1.0;

  ScalarPoCertificate out;
  // Scalar Riccati root: b^2 p^2 + (r(1-a^2) - b^2 q) p - q r = 0.
  if (b == 0.0) {
    out.p_star = q / (1.0 - a * a);
    out.k_star = 0.0;
  } else {
    double b2 = b * b;
    double lin = r * (1.0 - a * a) - b2 * q;
    out.p_star = (-lin + std::sqrt(lin * lin + 4.0 * b2 * q * r)) / (2.0 * b2);
    out.k_star = -a * b * out.p_star / (r + b2 * out.p_star);
  }
  out.closed_loop = a + b * out.k_star;

  // Predictor fixed point: c^2 F^2 + (sv(1-a^2) - sw c^2) F - sw sv = 0.
  if (c == 0.0) {
    if (std::abs(a) >= 1.0) {
      throw NonConvergence("scalar_po_bound: c = 0 with |a| >= 1");
    }
    out.filter_f = sw / (1.0 - a * a);
  } else {
    double c2 = c * c;
    double lin = sv * (1.0 - a * a) - sw * c2;
    out.filter_f =
        (-lin + std::sqrt(lin * lin + 4.0 * c2 * sw * sv)) / (2.0 * c2);
  }
  double s_e = c * c * out.filter_f + sv;
  out.filter_gain = out.filter_f * c / s_e;
  out.sigma_nu = out.filter_gain * out.filter_gain * s_e;
  out.gamma_nu = out.sigma_nu / (1.0 - out.closed_loop * out.closed_loop);

  out.delta = 1.0 / std::sqrt(budget.total_energy());
  out.closed_form_value = 0.5 / std::sqrt(budget.total_energy()) * out.p_star *
                          std::abs(out.closed_loop) * out.gamma_nu;

  // Excitation normalized on the reduction so E||u||^2 = beta at steady state.
  double k2 = out.k_star * out.k_star;
  double unit_gain = (1.0 - out.closed_loop * out.closed_loop) <= 0.0
                         ? 0.0
                         : b * b / (1.0 - out.closed_loop * out.closed_loop);
  out.excitation_var = std::max(
      0.0, (budget.beta - k2 * out.gamma_nu) / (k2 * unit_gain + 2.0));

  // Only the dead-column excitation distinguishes the pair.
  double kl = 0.0;
  if (out.sigma_nu > 0.0) {
    kl = 0.5 * budget.nt() * out.delta * out.delta * out.excitation_var /
         out.sigma_nu;
  } else if (out.excitation_var > 0.0) {
    kl = std::numeric_limits<double>::infinity();
  }
  double gap = 2.0 * out.delta * out.p_star * std::abs(out.closed_loop) *
               out.gamma_nu;

  out.cert.gradient_gap = gap;
  out.cert.kl_value = kl;
  out.cert.vacuous = kl >= 2.0;
  out.cert.bound_value = le_cam_two_point(gap, kl);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(1, 2);
  d(0, 1) = out.delta;
  out.cert.delta_used = Perturbation{d};
  return out;
}

std::vector<MarkovSweepRow> markov_parameter_sweep(
    double a, const std::vector<double>& m_grid, double s,
    const ExperimentBudget& budget) {
  if (s <= 0.0) {
    throw ValidationError("markov_parameter_sweep: s must be positive");
  }
  std::vector<MarkovSweepRow> rows;
  rows.reserve(m_grid.size());
  for (double m : m_grid) {
    if (!(m > 0.0)) {
      throw ValidationError("markov_parameter_sweep: m grid must be positive");
    }
    MarkovSweepRow row;
    row.m = m;
    row.b = std::sqrt(m) * s;
    row.c = std::sqrt(m) / s;
    row.detail = scalar_po_bound(a, row.b, row.c, budget);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pglim
