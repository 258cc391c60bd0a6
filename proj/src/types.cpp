#include "pglim/types.hpp"

#include "pglim/errors.hpp"
#include "pglim/linalg.hpp"

namespace pglim {

StateSpaceSystem make_scalar_system(double a, double b, double sigma_w_var) {
  StateSpaceSystem S;
  S.A = Eigen::MatrixXd::Constant(1, 1, a);
  S.B = Eigen::MatrixXd::Constant(1, 1, b);
  S.SigmaW = Eigen::MatrixXd::Constant(1, 1, sigma_w_var);
  return S;
}

CostSpec make_scalar_cost(double q, double r) {
  CostSpec cost;
  cost.Q = Eigen::MatrixXd::Constant(1, 1, q);
  cost.R = Eigen::MatrixXd::Constant(1, 1, r);
  return cost;
}

void validate_system(const StateSpaceSystem& S) {
  if (S.A.rows() != S.A.cols()) {
    throw DimensionError("system: A must be square");
  }
  if (S.B.rows() != S.A.rows()) {
    throw DimensionError("system: B row count must match A");
  }
  if (S.SigmaW.rows() != S.A.rows() || S.SigmaW.cols() != S.A.rows()) {
    throw DimensionError("system: SigmaW must be d_x x d_x");
  }
  if (!is_psd(S.SigmaW)) {
    throw ValidationError("system: SigmaW must be symmetric PSD");
  }
}

void validate_cost(const CostSpec& cost, int dx, int du) {
  if (cost.Q.rows() != dx || cost.Q.cols() != dx) {
    throw DimensionError("cost: Q must be d_x x d_x");
  }
  if (cost.R.rows() != du || cost.R.cols() != du) {
    throw DimensionError("cost: R must be d_u x d_u");
  }
  if (!is_psd(cost.Q)) {
    throw ValidationError("cost: Q must be symmetric PSD");
  }
  if (!is_symmetric(cost.R) || !is_pd(cost.R)) {
    throw ValidationError("cost: R must be symmetric positive definite");
  }
}

void validate_controller(const Controller& K, int dx, int du) {
  if (K.K.rows() != du || K.K.cols() != dx) {
    throw DimensionError("controller: K must be d_u x d_x");
  }
}

void validate_output_system(const OutputSystem& G) {
  StateSpaceSystem S{G.A, G.B, G.SigmaW};
  validate_system(S);
  if (G.C.cols() != G.A.rows()) {
    throw DimensionError("output system: C column count must match A");
  }
  if (G.SigmaV.rows() != G.C.rows() || G.SigmaV.cols() != G.C.rows()) {
    throw DimensionError("output system: SigmaV must be d_y x d_y");
  }
  if (!is_symmetric(G.SigmaV) || !is_pd(G.SigmaV)) {
    throw ValidationError("output system: SigmaV must be positive definite");
  }
}

void validate_policy(const ExplorationPolicy& policy, int dx, int du) {
  validate_controller(policy.feedback, dx, du);
  if (policy.excitation_cov.rows() != du || policy.excitation_cov.cols() != du) {
    throw DimensionError("policy: excitation covariance must be d_u x d_u");
  }
  if (!is_psd(policy.excitation_cov)) {
    throw ValidationError("policy: excitation covariance must be symmetric PSD");
  }
}

void validate_budget(const ExperimentBudget& budget) {
  if (budget.N < 1 || budget.T < 1) {
    throw ValidationError("budget: N and T must be at least 1");
  }
  if (!(budget.beta > 0.0)) {
    throw ValidationError("budget: beta must be positive");
  }
}

}  // namespace pglim
