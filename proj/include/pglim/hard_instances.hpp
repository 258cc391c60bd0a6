#pragma once

#include <vector>

#include "pglim/core_lqr.hpp"
#include "pglim/types.hpp"

namespace pglim {

// S2 = (A - Delta*K_star, B + Delta, SigmaW). The closed loop A' + B'K_star
// equals A + B K_star up to floating-point associativity.
StateSpaceSystem perturb_system(const StateSpaceSystem& S1,
                                const Controller& K_star,
                                const Perturbation& delta);

// Gradient of the perturbed system at the nominal optimum, in closed form:
// 2 Delta' P (A + B K_star) Gamma, with P and Gamma computed on S1.
Eigen::MatrixXd perturbed_gradient_closed_form(const StateSpaceSystem& S1,
                                               const CostSpec& cost,
                                               const Perturbation& delta);

// Exact divergence between the trajectory laws of S1 and S2 under the given
// policy, computed by propagating the deterministic second moment of the state
// (no sampling): sum over steps of
//   1/2 E ||(A1-A2) x_t + (B1-B2) u_t||^2 weighted by SigmaW^{-1}.
double kl_state_trajectories_exact(const StateSpaceSystem& S1,
                                   const StateSpaceSystem& S2,
                                   const ExplorationPolicy& policy,
                                   const ExperimentBudget& budget);

// max(0, gap/2 * (1 - sqrt(kl/2))).
double le_cam_two_point(double gap_delta, double kl);

// Two-point certificate around the optimum of S1 for the Delta-parameterized
// alternative. gradient_gap is the operator norm of the closed-form gradient.
LowerBoundCertificate lower_bound_theorem1(const StateSpaceSystem& S1,
                                           const CostSpec& cost,
                                           const Perturbation& delta,
                                           const ExplorationPolicy& policy,
                                           const ExperimentBudget& budget);

// Feedback at K_star plus isotropic excitation scaled so the expected input
// energy per step equals beta at steady state (clamped at zero excitation when
// feedback alone exceeds the budget).
ExplorationPolicy budget_normalized_policy(const StateSpaceSystem& S,
                                           const CostSpec& cost,
                                           const ExperimentBudget& budget);

// Input-energy upper bound on the divergence: delta^2 * N*T * (Gamma + beta).
double kl_budget_upper_bound(double delta, const ExperimentBudget& budget,
                             double gamma);

struct ScalarCertificate {
  LowerBoundCertificate cert;
  double k_star = 0.0;
  double p_star = 0.0;
  double gamma = 0.0;
  double closed_loop = 0.0;
  double delta = 0.0;
  // |P (a + b k) Gamma| / sqrt(NT (beta + Gamma)), the certificate's scaling
  // written out for scalar systems.
  double closed_form_value = 0.0;
  double kl_upper = 0.0;  // budget-based bound on the divergence, for comparison
};

// Scalar certificate with delta^2 = 1/(2NT(Gamma + beta)) and the default
// budget-normalized policy. Diverges as |b| -> 0 when |a| >= 1.
ScalarCertificate scalar_lower_bound(double a, double b, double q, double r,
                                     double sigma_w_var,
                                     const ExperimentBudget& budget);

// Certificate for Delta with Delta K_star = 0 and ||Delta||_op <= 1, scaled by
// epsilon/sqrt(beta N T).
LowerBoundCertificate corollary_nullspace_bound(const StateSpaceSystem& S1,
                                                const CostSpec& cost,
                                                const ExperimentBudget& budget,
                                                const Perturbation& delta,
                                                double epsilon = 1.0);

// Decoupled pair: an integrator-like chain (rho on the diagonal, 2 on the
// superdiagonal) plus an isolated first state, two inputs at the ends.
struct IntegratorChain {
  StateSpaceSystem system;
  CostSpec cost;
  Eigen::MatrixXd A0;  // (d_x-1) x (d_x-1) chain block
  Eigen::MatrixXd B0;  // (d_x-1) x 1, last basis vector
  CostSpec cost0;
  Perturbation delta_template;  // d_x x 2 zeros; column 0 rows 1.. hold Delta_1
};

IntegratorChain make_integrator_chain(int dx, double rho);

// Fills the structured perturbation slot with the given (d_x-1)-vector.
Perturbation chain_perturbation(const IntegratorChain& chain,
                                const Eigen::VectorXd& delta1);

// B0' P0 B0 + R0 for the chain subsystem; raises Error if the exponential
// floor 2^(2 dx - 4) + 1 is violated.
double riccati_growth_check(int dx, double rho);

struct CurseCertificate {
  LowerBoundCertificate cert;
  double subsystem_gap = 0.0;     // ||Delta_1' P0 (A0 + B0 K0)||
  double riccati_value = 0.0;     // B0' P0 B0 + R0
  Eigen::VectorXd delta1;
};

// Certificate for the chain family with Delta_1 chosen as the top
// left-singular direction of P0 (A0 + B0 K0), scaled as in
// corollary_nullspace_bound. For dx >= 6 the subsystem gap is checked against
// 0.4 * (B0' P0 B0 + R0).
CurseCertificate dimension_curse_bound(int dx, double rho,
                                       const ExperimentBudget& budget);

struct TwoScalarRow {
  double k = 0.0;
  bool s1_stable = false;
  bool s2_stable = false;
  double j1 = 0.0;  // +inf when unstable
  double j2 = 0.0;
};

// For S1 = (a, b) and S2 = (a, -b) with |a| > 1, tabulates stability and cost
// of each gain in the grid; no gain stabilizes both.
std::vector<TwoScalarRow> two_scalar_demo(double a, double b,
                                          const std::vector<double>& k_grid);

}  // namespace pglim
