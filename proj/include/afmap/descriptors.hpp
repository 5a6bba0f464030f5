#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "afmap/mesh.hpp"
#include "afmap/spectral.hpp"

namespace afmap {

enum class FeatureKind { HKS, WKS, XYZ, Transformed, Custom };

struct FeatureSet {
  Eigen::MatrixXd values;  // |V| x d
  FeatureKind kind = FeatureKind::Custom;

  int dim() const { return static_cast<int>(values.cols()); }
  int vertex_count() const { return static_cast<int>(values.rows()); }

  /// Throws NumericalError on non-finite entries and DeadChannelError when a
  /// column has zero variance.
  void validate() const;
};

/// Learnable d x d' linear map applied on the right of the features.
struct FeatureTransform {
  Eigen::MatrixXd weights;

  /// d x d' identity padded with zeros.
  static FeatureTransform identity(int d, int d_out = -1);
};

/// HKS(v, t) = Σ_i e^{−tλ_i} φ_i(v)², one column per time, each column
/// normalized to unit M-norm.
FeatureSet hks(const Spectrum& spec, const std::vector<double>& times);

/// `count` times log-spaced over [4 ln10 / λ_{k−1}, 4 ln10 / λ_1].
std::vector<double> default_hks_times(const Spectrum& spec, int count = 16);

/// Normalized WKS band weights over eigen-indices 1..k−1 for log-energy `energy`.
Eigen::VectorXd wks_weights(const Spectrum& spec, double energy, double sigma);

/// Wave kernel signature on log-eigenvalue energies, columns M-normalized.
FeatureSet wks(const Spectrum& spec, const std::vector<double>& energies, double sigma);

/// `count` energies evenly spaced over [log λ_1, log λ_{k−1}], with the
/// customary σ = 7 × spacing.
std::pair<std::vector<double>, double> default_wks_energies(const Spectrum& spec, int count = 16);

/// Vertex coordinates, M-centred and M-normalized per axis.
FeatureSet xyz(const TriMesh& mesh, const Eigen::VectorXd& mass);

/// values · A, kind = Transformed. Throws DimensionMismatchError or
/// DeadChannelError (e.g. A = 0).
FeatureSet apply_transform(const FeatureSet& features, const FeatureTransform& transform);

/// Column-wise concatenation.
FeatureSet concat(const FeatureSet& a, const FeatureSet& b);

}  // namespace afmap
