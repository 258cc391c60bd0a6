#include "pglim/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "pglim/errors.hpp"

namespace pglim {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("spectral_radius: matrix must be square");
  }
  if (M.rows() == 0) return 0.0;
  if (!M.allFinite()) return std::numeric_limits<double>::infinity();
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& M, double tol) {
  if (!is_symmetric(M, tol)) return false;
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return min_symmetric_eigenvalue(M) >= -tol * scale;
}

bool is_pd(const Eigen::MatrixXd& M) {
  if (!is_symmetric(M)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(M));
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N) {
  Eigen::MatrixXd out(M.rows() * N.rows(), M.cols() * N.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out.block(i * N.rows(), j * N.cols(), N.rows(), N.cols()) = M(i, j) * N;
    }
  }
  return out;
}

namespace {

// vec(A X A') = (A (x) A) vec(X) in column-major convention.
Eigen::MatrixXd lyapunov_kron(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& C) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(n * n, n * n) - kronecker(A, A);
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  Eigen::VectorXd x = lhs.partialPivLu().solve(c);
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

Eigen::MatrixXd lyapunov_doubling(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& C) {
  Eigen::MatrixXd X = C;
  Eigen::MatrixXd M = A;
  for (int k = 0; k < 128; ++k) {
    Eigen::MatrixXd term = M * X * M.transpose();
    X += term;
    if (term.cwiseAbs().maxCoeff() <=
        1e-18 * std::max(1.0, X.cwiseAbs().maxCoeff())) {
      break;
    }
    M = M * M;
  }
  return X;
}

}  // namespace

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& C,
                                        double tol) {
  if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows()) {
    throw DimensionError("solve_discrete_lyapunov: incompatible shapes");
  }
  if (spectral_radius(A) >= 1.0) {
    throw UnstableClosedLoop("solve_discrete_lyapunov: spectral radius >= 1");
  }
  Eigen::MatrixXd X = A.rows() <= kLyapunovKroneckerDim ? lyapunov_kron(A, C)
                                                        : lyapunov_doubling(A, C);
  X = symmetrize(X);
  double residual = (X - A * X * A.transpose() - C).norm();
  if (!X.allFinite() || residual > tol * (1.0 + X.norm())) {
    throw NonConvergence("solve_discrete_lyapunov: residual " +
                         std::to_string(residual) + " above tolerance");
  }
  return X;
}

double operator_norm(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) return 0.0;
  if (!M.allFinite()) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = M.cols();
  Eigen::MatrixXd G = M.transpose() * M;
  if (G.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // Graded start vector avoids starting orthogonal to the top direction.
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 1e-3 * double(i);
  v.normalize();

  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd w = G * v;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    double next = w.dot(G * w);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return std::sqrt(std::max(0.0, next));
    }
    lambda = next;
    v = w;
  }
  // Stalled (e.g. tied singular values); fall back to a dense SVD.
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

Eigen::VectorXd top_left_singular_vector(const Eigen::MatrixXd& M, double tol) {
  const Eigen::Index m = M.rows();
  Eigen::MatrixXd G = M * M.transpose();
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = 1.0 + 1e-3 * double(i);
  v.normalize();
  if (G.cwiseAbs().maxCoeff() == 0.0) return v;

  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < 100000 && !converged; ++it) {
    Eigen::VectorXd w = G * v;
    double norm = w.norm();
    if (norm == 0.0) break;
    w /= norm;
    double next = w.dot(G * w);
    converged = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    v = w;
  }
  if (!converged) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
    v = svd.matrixU().col(0);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(v(i)) > 1e-14) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return v;
}

Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& Sigma) {
  if (Sigma.rows() != Sigma.cols()) {
    throw DimensionError("covariance_sqrt: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(Sigma));
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace pglim
