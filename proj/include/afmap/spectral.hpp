#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "afmap/mesh.hpp"

namespace afmap {

/// First k generalized eigenpairs of (stiffness, mass), M-orthonormal,
/// eigenvalues ascending, each column signed so its largest-magnitude entry
/// is positive.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(Eigen::MatrixXd phi, Eigen::VectorXd eigenvalues, Eigen::VectorXd mass,
           std::uint64_t mesh_hash = 0, double tolerance = 0.0);

  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  int k() const { return static_cast<int>(eigenvalues_.size()); }
  int vertex_count() const { return static_cast<int>(phi_.rows()); }
  std::uint64_t mesh_hash() const { return mesh_hash_; }
  double tolerance() const { return tolerance_; }

  /// ΦᵀM restricted to the first `rows` eigenfunctions (k x |V| by default).
  Eigen::MatrixXd pinv(int rows = -1) const;

 private:
  Eigen::MatrixXd phi_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd mass_;
  std::uint64_t mesh_hash_ = 0;
  double tolerance_ = 0.0;
};

struct EigenOptions {
  /// Relative residual ‖Kφ − λMφ‖_{M⁻¹} / λ_{k−1} every returned pair must meet.
  double tolerance = 1e-10;
  int max_iterations = 1000;
  /// Shift at unit surface area; scaled by 1/area internally.
  double shift = -1e-8;
};

/// Throws ConvergenceError, FirstEigenvalueError (disconnected mesh) or
/// InvalidRangeError (k outside [1, |V|]; k = |V| gives the full basis).
Spectrum eigendecompose(const Operators& ops, int k, const EigenOptions& opts = {},
                        std::uint64_t mesh_hash = 0);

/// Filter response f(λ). DiagonalGain ignores λ and returns its explicit gains.
struct SpectralFilter {
  struct Polynomial {
    std::vector<double> coefficients;  // f(λ) = Σ_j θ_j λ^j
  };
  struct HeatExponential {
    double time = 0.0;
  };
  struct DiagonalGain {
    Eigen::VectorXd gains;
  };

  std::variant<Polynomial, HeatExponential, DiagonalGain> kind;

  static SpectralFilter polynomial(std::vector<double> coefficients);
  static SpectralFilter heat(double t);
  static SpectralFilter diagonal(Eigen::VectorXd gains);

  Eigen::VectorXd response(const Eigen::VectorXd& eigenvalues) const;
};

/// Φ · diag(f(Λ)) · ΦᵀM · signal.
Eigen::MatrixXd spectral_convolve(const Spectrum& spec, const SpectralFilter& filter,
                                  const Eigen::MatrixXd& signal);

/// Φ · e^{−tΛ} · ΦᵀM · signal.
Eigen::MatrixXd heat_diffuse(const Spectrum& spec, double t, const Eigen::MatrixXd& signal);

}  // namespace afmap
