// Shift-invert subspace iteration with Rayleigh-Ritz for the k smallest
// generalized eigenpairs of K φ = λ M φ, M diagonal positive.
//
// The constant vector is an exact null vector of the cotangent stiffness of a
// connected mesh. It stays pinned as column 0 of the search subspace and is
// projected out of every solve.

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "afmap/error.hpp"
#include "afmap/spectral.hpp"

namespace afmap {

namespace {

bool stiffness_graph_connected(const Eigen::SparseMatrix<double>& K) {
  const int n = static_cast<int>(K.rows());
  std::vector<int> stack = {0};
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, u); it; ++it) {
      const int v = static_cast<int>(it.row());
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

// Modified Gram-Schmidt in the M inner product, two passes, starting at
// column `first` (earlier columns are assumed M-orthonormal already).
void m_orthonormalize(Eigen::MatrixXd& X, const Eigen::VectorXd& mass, int first) {
  for (int j = first; j < X.cols(); ++j) {
    const double before = std::sqrt(X.col(j).cwiseAbs2().dot(mass));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double c = X.col(i).cwiseProduct(mass).dot(X.col(j));
        X.col(j) -= c * X.col(i);
      }
    }
    const double norm = std::sqrt(X.col(j).cwiseAbs2().dot(mass));
    if (!(norm > 1e-13 * before) || !std::isfinite(norm)) {
      throw ConvergenceError("eigendecompose: search subspace lost rank at column " +
                             std::to_string(j));
    }
    X.col(j) /= norm;
  }
}

void fix_signs(Eigen::MatrixXd& phi) {
  for (int j = 0; j < phi.cols(); ++j) {
    Eigen::Index arg = 0;
    phi.col(j).cwiseAbs().maxCoeff(&arg);
    if (phi(arg, j) < 0) phi.col(j) = -phi.col(j);
  }
}

}  // namespace

Spectrum eigendecompose(const Operators& ops, int k, const EigenOptions& opts,
                        std::uint64_t mesh_hash) {
  const Eigen::SparseMatrix<double>& K = ops.stiffness;
  const Eigen::VectorXd& mass = ops.mass;
  const int n = static_cast<int>(K.rows());
  if (k < 1 || k > n) {
    throw InvalidRangeError("eigendecompose: k = " + std::to_string(k) + " must lie in [1, " +
                            std::to_string(n) + "]");
  }
  if ((mass.array() <= 0.0).any()) throw NumericalError("eigendecompose: non-positive mass entry");
  if (!stiffness_graph_connected(K)) {
    throw FirstEigenvalueError("eigendecompose: λ = 0 has multiplicity > 1 (mesh is disconnected)");
  }

  const double area = mass.sum();
  const double sigma = opts.shift / area;
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(area));

  Eigen::SparseMatrix<double> shifted = K;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma * mass[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecompose: factorization of K - σM failed");
  }

  const int p = std::min(n, std::max(2 * k, k + 10));

  // Deterministic start block: constant vector followed by fixed-seed noise.
  std::mt19937_64 rng(0x5eedULL);
  Eigen::MatrixXd X(n, p);
  X.col(0) = constant;
  for (int j = 1; j < p; ++j) {
    for (int i = 0; i < n; ++i) X(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  }
  m_orthonormalize(X, mass, 1);

  Eigen::VectorXd ritz;
  Eigen::MatrixXd Y(n, p);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    Y.col(0) = constant;
    for (int j = 1; j < p; ++j) {
      Y.col(j) = solver.solve(mass.cwiseProduct(X.col(j)));
      Y.col(j) -= (constant.cwiseProduct(mass).dot(Y.col(j))) * constant;
    }
    m_orthonormalize(Y, mass, 1);

    Eigen::MatrixXd projected = Y.transpose() * (K * Y);
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(projected);
    if (rr.info() != Eigen::Success) throw ConvergenceError("eigendecompose: Rayleigh-Ritz failed");
    ritz = rr.eigenvalues();
    X = Y * rr.eigenvectors();

    // λ_0 = 0, so k = 1 is measured against λ_1.
    const double scale = std::max(std::abs(ritz[std::min(std::max(k - 1, 1), p - 1)]), 1e-300);
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd r = K * X.col(j) - ritz[j] * mass.cwiseProduct(X.col(j));
      worst = std::max(worst, std::sqrt(r.cwiseAbs2().cwiseQuotient(mass).sum()) / scale);
    }
    if (worst <= opts.tolerance || p == n) {
      Eigen::MatrixXd phi = X.leftCols(k);
      Eigen::VectorXd lambda = ritz.head(k);
      if (k > 1 && lambda[1] <= 1e-7 * lambda[k - 1]) {
        throw FirstEigenvalueError("eigendecompose: second eigenvalue is numerically zero");
      }
      fix_signs(phi);
      return Spectrum(std::move(phi), std::move(lambda), mass, mesh_hash, opts.tolerance);
    }
  }
  char tol[32];
  std::snprintf(tol, sizeof tol, "%g", opts.tolerance);
  throw ConvergenceError("eigendecompose: no convergence to " + std::string(tol) + " after " +
                         std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace afmap
