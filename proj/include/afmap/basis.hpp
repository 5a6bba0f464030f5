#pragma once

#include <memory>
#include <utility>

#include <Eigen/Core>

#include "afmap/spectral.hpp"

namespace afmap {

/// Diagonal diffusion parameters T ≥ 0 and the gains G = e^{−T} ∈ (0, 1].
class InhibitionFilter {
 public:
  InhibitionFilter() = default;
  /// Identity inhibition: T ≡ 0.
  explicit InhibitionFilter(int k);
  /// Throws InvalidRangeError if any entry is negative or non-finite.
  explicit InhibitionFilter(Eigen::VectorXd times);

  int k() const { return static_cast<int>(times_.size()); }
  const Eigen::VectorXd& times() const { return times_; }
  Eigen::VectorXd gains() const { return (-times_.array()).exp().matrix(); }

 private:
  Eigen::VectorXd times_;
};

/// Ψ = Φ·diag(G) with pseudoinverse Ψ† = diag(G)⁻¹·ΦᵀM.
///
/// Ψ is stored at full width; Ψ† rows are formed on request for the
/// truncation asked for, since the multi-resolution loss sweeps several.
class LearnableBasis {
 public:
  LearnableBasis(std::shared_ptr<const Spectrum> spectrum, Eigen::VectorXd gains);

  int k() const { return static_cast<int>(gains_.size()); }
  int vertex_count() const { return static_cast<int>(psi_.rows()); }
  const Eigen::MatrixXd& psi() const { return psi_; }
  const Eigen::VectorXd& gains() const { return gains_; }
  const Spectrum& spectrum() const { return *spectrum_; }
  const std::shared_ptr<const Spectrum>& spectrum_ptr() const { return spectrum_; }

  /// First `cols` columns of Ψ.
  Eigen::MatrixXd psi(int cols) const { return psi_.leftCols(cols); }
  /// First `rows` rows of Ψ†.
  Eigen::MatrixXd pinv(int rows) const;
  Eigen::MatrixXd pinv() const { return pinv(k()); }

 private:
  std::shared_ptr<const Spectrum> spectrum_;
  Eigen::VectorXd gains_;
  Eigen::MatrixXd psi_;
};

/// Throws DimensionMismatchError if filter.k() != spec.k(),
/// GainUnderflowError if some gain is below 1e-300.
LearnableBasis make_basis(std::shared_ptr<const Spectrum> spec, const InhibitionFilter& filter);

/// Ψ_X = Φ_X·G and Ψ_Y = Φ_Y·G from one shared filter.
std::pair<LearnableBasis, LearnableBasis> shared_filter_pair(std::shared_ptr<const Spectrum> spec_x,
                                                             std::shared_ptr<const Spectrum> spec_y,
                                                             const InhibitionFilter& filter);

}  // namespace afmap
