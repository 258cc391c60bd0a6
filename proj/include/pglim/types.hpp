#pragma once

#include <Eigen/Dense>

namespace pglim {

// Linear system x_{t+1} = A x_t + B u_t + w_t with w_t ~ N(0, SigmaW), x_0 = 0.
struct StateSpaceSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd SigmaW;

  int dx() const { return static_cast<int>(A.rows()); }
  int du() const { return static_cast<int>(B.cols()); }
};

// Quadratic stage cost x'Qx + u'Ru.
struct CostSpec {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

// Static state feedback u_t = K x_t.
struct Controller {
  Eigen::MatrixXd K;
};

// Solution of the value fixed point P = Q + K'RK + (A+BK)'P(A+BK).
struct ValueMatrix {
  Eigen::MatrixXd P;
};

// Stationary closed-loop covariance G = SigmaW + (A+BK) G (A+BK)'.
struct Gramian {
  Eigen::MatrixXd Gamma;
};

// Additive model perturbation (d_x x d_u) applied as A' = A - Delta*K, B' = B + Delta.
struct Perturbation {
  Eigen::MatrixXd Delta;
};

// Experiment size: N rollouts of length T, average input energy beta per step.
struct ExperimentBudget {
  long N = 1;
  long T = 1;
  double beta = 1.0;

  double nt() const { return static_cast<double>(N) * static_cast<double>(T); }
  double total_energy() const { return beta * nt(); }
};

// Exploration inputs u_t = feedback.K x_t + eta_t with eta_t ~ N(0, excitation_cov) i.i.d.
struct ExplorationPolicy {
  Controller feedback;
  Eigen::MatrixXd excitation_cov;
};

// Evaluated two-point estimation-error bound with intermediates.
// bound_value = max(0, gradient_gap/2 * (1 - sqrt(kl_value/2))).
struct LowerBoundCertificate {
  double bound_value = 0.0;
  double gradient_gap = 0.0;
  double kl_value = 0.0;
  Perturbation delta_used;
  bool vacuous = false;
};

// Partially observed system: x_{t+1} = A x_t + B u_t + w_t, y_t = C x_t + v_t.
struct OutputSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd SigmaW;
  Eigen::MatrixXd SigmaV;

  int dx() const { return static_cast<int>(A.rows()); }
  int du() const { return static_cast<int>(B.cols()); }
  int dy() const { return static_cast<int>(C.rows()); }
};

// Dynamic output-feedback controller xi_{t+1} = A_dyn xi_t + B_dyn y_t, u_t = K xi_t.
struct DynamicController {
  Eigen::MatrixXd A_dyn;
  Eigen::MatrixXd B_dyn;
  Eigen::MatrixXd K;
};

// Steady-state filter quantities: F is the one-step prediction error covariance,
// L the filter gain, SigmaNu the innovation covariance in state coordinates.
struct SteadyStateFilter {
  Eigen::MatrixXd F;
  Eigen::MatrixXd L;
  Eigen::MatrixXd SigmaNu;
};

StateSpaceSystem make_scalar_system(double a, double b, double sigma_w_var);
CostSpec make_scalar_cost(double q, double r);

// Throw ValidationError/DimensionError when the structural invariants are violated.
void validate_system(const StateSpaceSystem& S);
void validate_cost(const CostSpec& cost, int dx, int du);
void validate_controller(const Controller& K, int dx, int du);
void validate_output_system(const OutputSystem& G);
void validate_policy(const ExplorationPolicy& policy, int dx, int du);
void validate_budget(const ExperimentBudget& budget);

}  // namespace pglim
