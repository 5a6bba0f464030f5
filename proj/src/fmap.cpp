#include "afmap/fmap.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "afmap/error.hpp"

namespace afmap {

namespace {

void check_order(int k, const LearnableBasis& bx, const LearnableBasis& by, const char* who) {
  if (k < 1 || k > bx.k() || k > by.k()) {
    throw InvalidRangeError(std::string(who) + ": truncation " + std::to_string(k) +
                            " exceeds basis orders " + std::to_string(bx.k()) + " / " +
                            std::to_string(by.k()));
  }
}

constexpr double kMaxCondition = 1e12;

}  // namespace

FunctionalMap fmap_solve(const FeatureSet& fx, const FeatureSet& fy, const LearnableBasis& bx,
                         const LearnableBasis& by, int k, double lambda_reg) {
  check_order(k, bx, by, "fmap_solve");
  if (fx.dim() != fy.dim()) {
    throw DimensionMismatchError("fmap_solve: feature dimensions " + std::to_string(fx.dim()) +
                                 " vs " + std::to_string(fy.dim()));
  }
  if (fx.vertex_count() != bx.vertex_count() || fy.vertex_count() != by.vertex_count()) {
    throw DimensionMismatchError("fmap_solve: features do not match basis vertex counts");
  }
  if (!(lambda_reg >= 0.0)) throw InvalidRangeError("fmap_solve: λ must be >= 0");

  // C·B ≈ A, B = Ψ_X†F_X and A = Ψ_Y†F_Y (k x d each).
  const Eigen::MatrixXd B = bx.pinv(k) * fx.values;
  const Eigen::MatrixXd A = by.pinv(k) * fy.values;
  const Eigen::MatrixXd gram = B * B.transpose();
  const Eigen::MatrixXd rhs = B * A.transpose();  // column i = B a_i
  const Eigen::VectorXd lx = bx.spectrum().eigenvalues().head(k);
  const Eigen::VectorXd ly = by.spectrum().eigenvalues().head(k);

  FunctionalMap out;
  out.C.resize(k, k);
  for (int i = 0; i < k; ++i) {
    // The commutativity term is diagonal per row: Σ_j (Λ_X[j] − Λ_Y[i])² c_ij².
    Eigen::MatrixXd system = gram;
    system.diagonal() += lambda_reg * (lx.array() - ly[i]).square().matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCondition) {
      throw SingularSystemError("fmap_solve: row " + std::to_string(i) +
                                " system is singular (condition " + std::to_string(hi / lo) + ")");
    }
    out.C.row(i) = system.ldlt().solve(rhs.col(i)).transpose();
  }
  return out;
}

FunctionalMap fmap_project(const PointwiseMap& pi, const LearnableBasis& bx, const LearnableBasis& by,
                           int k) {
  check_order(k, bx, by, "fmap_project");
  if (pi.source_count() != bx.vertex_count() || pi.target_count() != by.vertex_count()) {
    throw DimensionMismatchError("fmap_project: map is " + std::to_string(pi.target_count()) + "x" +
                                 std::to_string(pi.source_count()) + " but shapes have " +
                                 std::to_string(by.vertex_count()) + " / " +
                                 std::to_string(bx.vertex_count()) + " vertices");
  }
  return {by.pinv(k) * pi.apply(bx.psi(k)), MapDirection::XtoY};
}

double energy_bijectivity(const FunctionalMap& c_xy, const FunctionalMap& c_yx) {
  if (c_xy.C.cols() != c_yx.C.rows() || c_xy.C.rows() != c_yx.C.cols()) {
    throw DimensionMismatchError("energy_bijectivity: truncations differ");
  }
  const Eigen::MatrixXd prod = c_xy.C * c_yx.C;
  return (prod - Eigen::MatrixXd::Identity(prod.rows(), prod.cols())).squaredNorm();
}

double energy_orthogonality(const FunctionalMap& c) {
  const Eigen::MatrixXd prod = c.C * c.C.transpose();
  return (prod - Eigen::MatrixXd::Identity(prod.rows(), prod.cols())).squaredNorm();
}

double energy_coupling(const FunctionalMap& c, const PointwiseMap& pi, const LearnableBasis& bx,
                       const LearnableBasis& by) {
  return (c.C - fmap_project(pi, bx, by, c.k()).C).squaredNorm();
}

}  // namespace afmap
