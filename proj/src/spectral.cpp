#include "afmap/spectral.hpp"

#include <cmath>

#include "afmap/error.hpp"

namespace afmap {

Spectrum::Spectrum(Eigen::MatrixXd phi, Eigen::VectorXd eigenvalues, Eigen::VectorXd mass,
                   std::uint64_t mesh_hash, double tolerance)
    : phi_(std::move(phi)),
      eigenvalues_(std::move(eigenvalues)),
      mass_(std::move(mass)),
      mesh_hash_(mesh_hash),
      tolerance_(tolerance) {
  if (phi_.cols() != eigenvalues_.size() || phi_.rows() != mass_.size()) {
    throw DimensionMismatchError("Spectrum: Φ is " + std::to_string(phi_.rows()) + "x" +
                                 std::to_string(phi_.cols()) + " but |Λ| = " +
                                 std::to_string(eigenvalues_.size()) + ", |M| = " +
                                 std::to_string(mass_.size()));
  }
}

Eigen::MatrixXd Spectrum::pinv(int rows) const {
  if (rows < 0) rows = k();
  return phi_.leftCols(rows).transpose() * mass_.asDiagonal();
}

SpectralFilter SpectralFilter::polynomial(std::vector<double> coefficients) {
  return {Polynomial{std::move(coefficients)}};
}

SpectralFilter SpectralFilter::heat(double t) {
  if (!(t >= 0.0)) throw InvalidRangeError("heat filter requires t >= 0");
  return {HeatExponential{t}};
}

SpectralFilter SpectralFilter::diagonal(Eigen::VectorXd gains) {
  return {DiagonalGain{std::move(gains)}};
}

Eigen::VectorXd SpectralFilter::response(const Eigen::VectorXd& eigenvalues) const {
  struct Visitor {
    const Eigen::VectorXd& lambda;
    Eigen::VectorXd operator()(const Polynomial& p) const {
      // Horner
      Eigen::VectorXd out = Eigen::VectorXd::Zero(lambda.size());
      for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it) {
        out = (out.array() * lambda.array() + *it).matrix();
      }
      return out;
    }
    Eigen::VectorXd operator()(const HeatExponential& h) const {
      return (-h.time * lambda.array()).exp().matrix();
    }
    Eigen::VectorXd operator()(const DiagonalGain& d) const {
      if (d.gains.size() != lambda.size()) {
        throw DimensionMismatchError("diagonal filter has " + std::to_string(d.gains.size()) +
                                     " gains for " + std::to_string(lambda.size()) + " eigenvalues");
      }
      return d.gains;
    }
  };
  return std::visit(Visitor{eigenvalues}, kind);
}

Eigen::MatrixXd spectral_convolve(const Spectrum& spec, const SpectralFilter& filter,
                                  const Eigen::MatrixXd& signal) {
  if (signal.rows() != spec.vertex_count()) {
    throw DimensionMismatchError("signal has " + std::to_string(signal.rows()) + " rows, mesh has " +
                                 std::to_string(spec.vertex_count()) + " vertices");
  }
  const Eigen::VectorXd f = filter.response(spec.eigenvalues());
  const Eigen::MatrixXd coeffs = spec.phi().transpose() * (spec.mass().asDiagonal() * signal);
  return spec.phi() * (f.asDiagonal() * coeffs);
}

Eigen::MatrixXd heat_diffuse(const Spectrum& spec, double t, const Eigen::MatrixXd& signal) {
  return spectral_convolve(spec, SpectralFilter::heat(t), signal);
}

}  // namespace afmap
