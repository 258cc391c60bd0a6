#pragma once

#include <vector>

#include "pglim/linalg.hpp"
#include "pglim/types.hpp"

namespace pglim {

Eigen::MatrixXd closed_loop(const StateSpaceSystem& S, const Controller& K);

// True iff spectral_radius(A + BK) < 1 - margin.
bool is_stabilizing(const Controller& K, const StateSpaceSystem& S,
                    double margin = kStabilityMargin);

// P = Q + K'RK + (A+BK)' P (A+BK). Requires a stabilizing K.
ValueMatrix solve_lyapunov_value(const StateSpaceSystem& S, const CostSpec& cost,
                                 const Controller& K,
                                 double tol = kFixedPointTol);

// G = SigmaW + (A+BK) G (A+BK)'. Requires a stabilizing K.
Gramian closed_loop_gramian(const StateSpaceSystem& S, const Controller& K,
                            double tol = kFixedPointTol);

// Steady-state average cost tr(P_K SigmaW).
double lqr_cost(const StateSpaceSystem& S, const CostSpec& cost,
                const Controller& K);

// 2((R + B'P_K B)K + B'P_K A) Gamma_K.
Eigen::MatrixXd exact_policy_gradient(const StateSpaceSystem& S,
                                      const CostSpec& cost, const Controller& K);

struct DareSolution {
  ValueMatrix P;
  Controller K;
  long iterations = 0;
  double residual = 0.0;
};

// Fixed-point iteration P <- Q + A'PA - A'PB(R+B'PB)^{-1}B'PA from P = Q,
// stopping on relative residual <= tol. Divergence (non-stabilizable pair,
// iteration cap) raises NonConvergence. K = -(R+B'PB)^{-1}B'PA.
DareSolution solve_dare_optimal(const StateSpaceSystem& S, const CostSpec& cost,
                                double tol = kFixedPointTol,
                                long max_iters = kFixedPointMaxIters);

struct DescentRecord {
  Controller K;
  double cost = 0.0;
  double gradient_norm = 0.0;
};

// Gradient descent K <- K - step * grad J(K). Every recorded iterate is
// stabilizing; StepLeftStabilizingSet is raised when a step would leave the
// stabilizing set (callers should shrink the step).
std::vector<DescentRecord> policy_gradient_descent(
    const StateSpaceSystem& S, const CostSpec& cost, const Controller& K0,
    double step, long max_iters, double tol);

// Conservative step size keeping descent monotone on the K0 sublevel set,
// derived from the cost-based bounds tr(Gamma) <= J0/lambda_min(Q) and
// tr(P) <= J0/lambda_min(SigmaW).
double suggested_descent_step(const StateSpaceSystem& S, const CostSpec& cost,
                              const Controller& K0);

// Largest power-of-two multiple of the conservative step (up to 2^14) whose
// probe descent from K0 stays stabilizing with nonincreasing cost. The
// smoothness bound shrinks along any descent path, so a step validated at the
// start remains valid.
double tuned_descent_step(const StateSpaceSystem& S, const CostSpec& cost,
                          const Controller& K0, long probe_iters = 500);

}  // namespace pglim
