#pragma once

#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "pglim/core_lqr.hpp"
#include "pglim/types.hpp"

namespace pgtest {

// Deterministic random-instance generators used across the suites.
struct InstanceRng {
  explicit InstanceRng(std::uint64_t seed) : engine(seed) {}
  std::mt19937_64 engine;

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }

  Eigen::MatrixXd matrix(int rows, int cols, double scale = 1.0) {
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) M(i, j) = scale * uniform(-1.0, 1.0);
    }
    return M;
  }

  // Random PD matrix with eigenvalues in [lo, lo + spread].
  Eigen::MatrixXd spd(int n, double lo = 0.2, double spread = 1.0) {
    Eigen::MatrixXd M = matrix(n, n);
    return pglim::symmetrize(M * M.transpose() +
                             lo * Eigen::MatrixXd::Identity(n, n) +
                             spread * 1e-2 * Eigen::MatrixXd::Identity(n, n));
  }

  // A scaled to the requested spectral radius; K0 = 0 is stabilizing.
  pglim::StateSpaceSystem stable_system(int dx, int du, double radius = 0.8) {
    Eigen::MatrixXd A = matrix(dx, dx);
    double rho = pglim::spectral_radius(A);
    if (rho > 1e-12) A *= uniform(0.2, radius) / rho;
    pglim::StateSpaceSystem S;
    S.A = A;
    S.B = matrix(dx, du);
    S.SigmaW = spd(dx, 0.3, 0.7);
    return S;
  }

  pglim::CostSpec cost_for(int dx, int du) {
    pglim::CostSpec cost;
    cost.Q = spd(dx, 0.3, 0.7);
    cost.R = spd(du, 0.3, 0.7);
    return cost;
  }
};

// Central finite differences of the closed-loop cost in each gain entry.
inline Eigen::MatrixXd finite_difference_gradient(
    const pglim::StateSpaceSystem& S, const pglim::CostSpec& cost,
    const pglim::Controller& K, double step = 1e-5) {
  Eigen::MatrixXd grad(K.K.rows(), K.K.cols());
  for (int i = 0; i < K.K.rows(); ++i) {
    for (int j = 0; j < K.K.cols(); ++j) {
      pglim::Controller plus{K.K}, minus{K.K};
      plus.K(i, j) += step;
      minus.K(i, j) -= step;
      grad(i, j) = (pglim::lqr_cost(S, cost, plus) -
                    pglim::lqr_cost(S, cost, minus)) /
                   (2.0 * step);
    }
  }
  return grad;
}

// Truncated series oracle for X = A X A' + C.
inline Eigen::MatrixXd lyapunov_series(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& C,
                                       int terms = 20000) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int t = 0; t < terms; ++t) {
    Eigen::MatrixXd term = M * C * M.transpose();
    X += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * (1.0 + X.cwiseAbs().maxCoeff())) {
      break;
    }
    M = A * M;
  }
  return X;
}

inline double rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / (1.0 + want.norm());
}

}  // namespace pgtest
