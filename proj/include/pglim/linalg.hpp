#pragma once

#include <Eigen/Dense>

namespace pglim {

inline constexpr double kStabilityMargin = 1e-9;
inline constexpr double kFixedPointTol = 1e-12;
inline constexpr long kFixedPointMaxIters = 1000000;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M);

// Largest eigenvalue modulus. Throws DimensionError for non-square input.
double spectral_radius(const Eigen::MatrixXd& M);

bool is_symmetric(const Eigen::MatrixXd& M, double tol = 1e-9);
double min_symmetric_eigenvalue(const Eigen::MatrixXd& M);
bool is_psd(const Eigen::MatrixXd& M, double tol = 1e-9);
bool is_pd(const Eigen::MatrixXd& M);

// Solves X = A X A' + C for stable A. Dense Kronecker solve up to
// kLyapunovKroneckerDim, doubling iteration (squaring A) above that.
// The result is symmetrized; the fixed-point residual is checked against tol.
inline constexpr int kLyapunovKroneckerDim = 20;
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& C,
                                        double tol = kFixedPointTol);

// Largest singular value via power iteration on M'M (Eigen SVD fallback if the
// iteration stalls, e.g. on repeated singular values).
double operator_norm(const Eigen::MatrixXd& M, double tol = 1e-12);

// Unit vector u maximizing ||u' M||_2, i.e. the top left-singular direction.
// Sign fixed so the first nonzero entry is positive.
Eigen::VectorXd top_left_singular_vector(const Eigen::MatrixXd& M,
                                         double tol = 1e-12);

// Symmetric PSD square root, negative eigenvalues clamped to zero.
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& Sigma);

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N);

}  // namespace pglim
