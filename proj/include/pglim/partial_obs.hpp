#pragma once

#include <vector>

#include "pglim/hard_instances.hpp"
#include "pglim/types.hpp"

namespace pglim {

// One step of the predictor Riccati recursion:
//   F+ = SigmaW + A F A' - A F C'(C F C' + SigmaV)^{-1} C F A'.
Eigen::MatrixXd filter_riccati_step(const OutputSystem& G,
                                    const Eigen::MatrixXd& F);

// L = F C'(C F C' + SigmaV)^{-1}.
Eigen::MatrixXd filter_gain(const OutputSystem& G, const Eigen::MatrixXd& F);

// Innovation covariance in state coordinates: L (C F C' + SigmaV) L'.
Eigen::MatrixXd innovation_covariance(const OutputSystem& G,
                                      const Eigen::MatrixXd& F,
                                      const Eigen::MatrixXd& L);

// Iterates the predictor recursion from F = SigmaW to its fixed point.
SteadyStateFilter steady_state_filter(const OutputSystem& G,
                                      double tol = kFixedPointTol,
                                      long max_iters = kFixedPointMaxIters);

// The innovation-form state model of G: same (A, B), process noise SigmaNu.
StateSpaceSystem filter_reduction(const OutputSystem& G);

// Cost of u = K xhat on the filtered state model:
//   tr(P_K SigmaNu) + tr(Q (I - L C)).
double restricted_cost(const OutputSystem& G, const CostSpec& cost,
                       const Controller& K);

// 2((R + B'P_K B)K + B'P_K A) Gamma_nu with the innovation gramian below.
Eigen::MatrixXd restricted_policy_gradient(const OutputSystem& G,
                                           const CostSpec& cost,
                                           const Controller& K);

// Gamma_nu = SigmaNu + (A+BK) Gamma_nu (A+BK)'.
Gramian innovation_gramian(const OutputSystem& G, const Controller& K,
                           double tol = kFixedPointTol);

// Two-point certificate for output systems, evaluated on the filter reduction:
// the gap uses the innovation gramian and the divergence is computed at the
// state level of the reduction (innovations as process noise).
LowerBoundCertificate lower_bound_theorem2(const OutputSystem& G1,
                                           const CostSpec& cost,
                                           const Perturbation& delta,
                                           const ExplorationPolicy& policy,
                                           const ExperimentBudget& budget);

struct AlmostScalarPo {
  OutputSystem system;
  CostSpec cost;
};

// Scalar state, scalar output, two inputs of which the second is dead:
// B = [b 0], Q = SigmaW = SigmaV = 1, R = I_2.
AlmostScalarPo make_almost_scalar_po(double a, double b, double c);

struct ScalarPoCertificate {
  LowerBoundCertificate cert;
  double k_star = 0.0;
  double p_star = 0.0;
  double closed_loop = 0.0;
  double filter_f = 0.0;
  double filter_gain = 0.0;
  double sigma_nu = 0.0;
  double gamma_nu = 0.0;
  double delta = 0.0;
  double excitation_var = 0.0;
  // (1/(2 sqrt(NT beta))) * P |a + b k| Gamma_nu, the scalar closed form.
  double closed_form_value = 0.0;
};

// Certificate for the almost-scalar family with delta^2 = 1/(NT beta) on the
// dead input column, assembled from scalar closed forms. Matches
// lower_bound_theorem2 on the same instance.
ScalarPoCertificate scalar_po_bound(double a, double b, double c,
                                    const ExperimentBudget& budget);

struct MarkovSweepRow {
  double m = 0.0;
  double b = 0.0;
  double c = 0.0;
  ScalarPoCertificate detail;
};

// For each Markov parameter m in the grid, evaluates scalar_po_bound at
// b = sqrt(m) * s, c = sqrt(m) / s.
std::vector<MarkovSweepRow> markov_parameter_sweep(
    double a, const std::vector<double>& m_grid, double s,
    const ExperimentBudget& budget);

}  // namespace pglim
