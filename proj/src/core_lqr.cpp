#include "pglim/core_lqr.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "pglim/errors.hpp"

namespace pglim {

Eigen::MatrixXd closed_loop(const StateSpaceSystem& S, const Controller& K) {
  return S.A + S.B * K.K;
}

bool is_stabilizing(const Controller& K, const StateSpaceSystem& S,
                    double margin) {
  validate_controller(K, S.dx(), S.du());
  return spectral_radius(closed_loop(S, K)) < 1.0 - margin;
}

namespace {

void require_stabilizing(const Controller& K, const StateSpaceSystem& S,
                         const char* who) {
  if (!is_stabilizing(K, S)) {
    throw UnstableClosedLoop(std::string(who) +
                             ": controller does not stabilize the system");
  }
}

}  // namespace

ValueMatrix solve_lyapunov_value(const StateSpaceSystem& S, const CostSpec& cost,
                                 const Controller& K, double tol) {
  validate_cost(cost, S.dx(), S.du());
  require_stabilizing(K, S, "solve_lyapunov_value");
  Eigen::MatrixXd acl = closed_loop(S, K);
  Eigen::MatrixXd stage = symmetrize(cost.Q + K.K.transpose() * cost.R * K.K);
  // P = stage + acl' P acl solved as X = M X M' + C with M = acl'.
  return ValueMatrix{solve_discrete_lyapunov(acl.transpose(), stage, tol)};
}

Gramian closed_loop_gramian(const StateSpaceSystem& S, const Controller& K,
                            double tol) {
  validate_system(S);
  require_stabilizing(K, S, "closed_loop_gramian");
  return Gramian{solve_discrete_lyapunov(closed_loop(S, K), S.SigmaW, tol)};
}

double lqr_cost(const StateSpaceSystem& S, const CostSpec& cost,
                const Controller& K) {
  ValueMatrix P = solve_lyapunov_value(S, cost, K);
  return (P.P * S.SigmaW).trace();
}

Eigen::MatrixXd exact_policy_gradient(const StateSpaceSystem& S,
                                      const CostSpec& cost,
                                      const Controller& K) {
  ValueMatrix P = solve_lyapunov_value(S, cost, K);
  Gramian G = closed_loop_gramian(S, K);
  Eigen::MatrixXd BtP = S.B.transpose() * P.P;
  return 2.0 * ((cost.R + BtP * S.B) * K.K + BtP * S.A) * G.Gamma;
}

DareSolution solve_dare_optimal(const StateSpaceSystem& S, const CostSpec& cost,
                                double tol, long max_iters) {
  validate_system(S);
  validate_cost(cost, S.dx(), S.du());

  Eigen::MatrixXd P = symmetrize(cost.Q);
  long it = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; it < max_iters; ++it) {
    Eigen::MatrixXd BtP = S.B.transpose() * P;
    Eigen::MatrixXd G = symmetrize(cost.R + BtP * S.B);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
      throw NonConvergence("solve_dare_optimal: R + B'PB lost definiteness");
    }
    Eigen::MatrixXd BtPA = BtP * S.A;
    Eigen::MatrixXd next = symmetrize(cost.Q + S.A.transpose() * P * S.A -
                                      BtPA.transpose() * llt.solve(BtPA));
    residual = (next - P).norm() / (1.0 + next.norm());
    P = next;
    if (!P.allFinite() || P.norm() > 1e140) {
      throw NonConvergence(
          "solve_dare_optimal: iterates diverge (pair not stabilizable?)");
    }
    if (residual <= tol) break;
  }
  if (residual > tol) {
    throw NonConvergence("solve_dare_optimal: iteration cap reached, residual " +
                         std::to_string(residual));
  }

  Eigen::MatrixXd G = symmetrize(cost.R + S.B.transpose() * P * S.B);
  Controller K{-G.llt().solve(S.B.transpose() * P * S.A)};
  double dare_residual =
      (P - cost.Q - S.A.transpose() * P * closed_loop(S, K)).norm() /
      (1.0 + P.norm());
  return DareSolution{ValueMatrix{P}, K, it + 1, dare_residual};
}

std::vector<DescentRecord> policy_gradient_descent(const StateSpaceSystem& S,
                                                   const CostSpec& cost,
                                                   const Controller& K0,
                                                   double step, long max_iters,
                                                   double tol) {
  if (!is_stabilizing(K0, S)) {
    throw UnstableClosedLoop("policy_gradient_descent: K0 is not stabilizing");
  }
  std::vector<DescentRecord> path;
  Controller K = K0;
  for (long it = 0; it <= max_iters; ++it) {
    ValueMatrix P = solve_lyapunov_value(S, cost, K);
    Gramian G = closed_loop_gramian(S, K);
    double J = (P.P * S.SigmaW).trace();
    Eigen::MatrixXd BtP = S.B.transpose() * P.P;
    Eigen::MatrixXd grad =
        2.0 * ((cost.R + BtP * S.B) * K.K + BtP * S.A) * G.Gamma;
    double gnorm = grad.norm();
    path.push_back(DescentRecord{K, J, gnorm});
    if (gnorm <= tol || it == max_iters) break;
    Controller next{K.K - step * grad};
    if (!is_stabilizing(next, S)) {
      throw StepLeftStabilizingSet(
          "policy_gradient_descent: step left the stabilizing set; reduce the "
          "step size");
    }
    K = next;
  }
  return path;
}

namespace {

bool descent_probe_monotone(const StateSpaceSystem& S, const CostSpec& cost,
                            const Controller& K0, double step,
                            long probe_iters) {
  Controller K = K0;
  double previous = std::numeric_limits<double>::infinity();
  for (long it = 0; it < probe_iters; ++it) {
    ValueMatrix P = solve_lyapunov_value(S, cost, K);
    Gramian G = closed_loop_gramian(S, K);
    double J = (P.P * S.SigmaW).trace();
    if (J > previous + 1e-12 * (1.0 + previous)) return false;
    previous = J;
    Eigen::MatrixXd BtP = S.B.transpose() * P.P;
    Eigen::MatrixXd grad =
        2.0 * ((cost.R + BtP * S.B) * K.K + BtP * S.A) * G.Gamma;
    if (grad.norm() <= 1e-12) return true;
    Controller next{K.K - step * grad};
    if (!is_stabilizing(next, S)) return false;
    K = next;
  }
  return true;
}

}  // namespace

double tuned_descent_step(const StateSpaceSystem& S, const CostSpec& cost,
                          const Controller& K0, long probe_iters) {
  double base = suggested_descent_step(S, cost, K0);
  for (double factor = 16384.0; factor > 1.0; factor /= 2.0) {
    if (descent_probe_monotone(S, cost, K0, base * factor, probe_iters)) {
      return base * factor;
    }
  }
  return base;
}

double suggested_descent_step(const StateSpaceSystem& S, const CostSpec& cost,
                              const Controller& K0) {
  double J0 = lqr_cost(S, cost, K0);
  double lam_q = min_symmetric_eigenvalue(cost.Q);
  double lam_w = min_symmetric_eigenvalue(S.SigmaW);
  double b_norm = operator_norm(S.B);
  double r_norm = operator_norm(cost.R);
  if (J0 <= 0.0 || lam_q <= 0.0 || lam_w <= 0.0) {
    return 1.0 / (4.0 * (r_norm + b_norm * b_norm) *
                  std::max(1.0, operator_norm(cost.Q)));
  }
  double p_bound = J0 / lam_w;
  double gamma_bound = J0 / lam_q;
  double smoothness = 2.0 * (r_norm + b_norm * b_norm * p_bound) * gamma_bound;
  return 0.5 / smoothness;
}

}  // namespace pglim
