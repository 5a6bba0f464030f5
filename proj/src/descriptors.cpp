#include "afmap/descriptors.hpp"

#include <cmath>
#include <string>

#include "afmap/error.hpp"

namespace afmap {

namespace {

void normalize_columns(Eigen::MatrixXd& values, const Eigen::VectorXd& mass) {
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double norm = std::sqrt(values.col(j).cwiseAbs2().dot(mass));
    if (norm > 0.0) values.col(j) /= norm;
  }
}

}  // namespace

void FeatureSet::validate() const {
  if (!values.allFinite()) throw NumericalError("feature matrix has non-finite entries");
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double mean = values.col(j).mean();
    const double var = (values.col(j).array() - mean).square().mean();
    if (!(var > 0.0)) throw DeadChannelError("feature channel " + std::to_string(j) + " is constant");
  }
}

FeatureTransform FeatureTransform::identity(int d, int d_out) {
  if (d_out < 0) d_out = d;
  return {Eigen::MatrixXd::Identity(d, d_out)};
}

FeatureSet hks(const Spectrum& spec, const std::vector<double>& times) {
  if (times.empty()) throw InvalidRangeError("hks: no diffusion times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) throw InvalidRangeError("hks: times must be positive");
    if (i > 0 && times[i] < times[i - 1]) throw InvalidRangeError("hks: times must be ascending");
  }
  const Eigen::MatrixXd phi2 = spec.phi().cwiseAbs2();
  Eigen::MatrixXd weights(spec.k(), static_cast<Eigen::Index>(times.size()));
  for (std::size_t c = 0; c < times.size(); ++c) {
    weights.col(static_cast<Eigen::Index>(c)) = (-times[c] * spec.eigenvalues().array()).exp().matrix();
  }
  FeatureSet out{phi2 * weights, FeatureKind::HKS};
  normalize_columns(out.values, spec.mass());
  return out;
}

std::vector<double> default_hks_times(const Spectrum& spec, int count) {
  if (spec.k() < 2) throw InvalidRangeError("default_hks_times: need k >= 2");
  const double lo = 4.0 * std::log(10.0) / spec.eigenvalues()[spec.k() - 1];
  const double hi = 4.0 * std::log(10.0) / spec.eigenvalues()[1];
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) {
    const double a = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    t[i] = std::exp(std::log(lo) + a * (std::log(hi) - std::log(lo)));
  }
  return t;
}

Eigen::VectorXd wks_weights(const Spectrum& spec, double energy, double sigma) {
  if (!(sigma > 0.0)) throw InvalidRangeError("wks: sigma must be positive");
  if (spec.k() < 2) throw InvalidRangeError("wks: need k >= 2");
  const int m = spec.k() - 1;
  Eigen::VectorXd logits(m);
  for (int i = 0; i < m; ++i) {
    const double d = energy - std::log(spec.eigenvalues()[i + 1]);
    logits[i] = -d * d / (2.0 * sigma * sigma);
  }
  // Max-shift keeps far-out energies finite: the nearest band dominates.
  Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp().matrix();
  return w / w.sum();
}

FeatureSet wks(const Spectrum& spec, const std::vector<double>& energies, double sigma) {
  if (energies.empty()) throw InvalidRangeError("wks: no energies");
  const Eigen::MatrixXd phi2 = spec.phi().rightCols(spec.k() - 1).cwiseAbs2();
  Eigen::MatrixXd weights(spec.k() - 1, static_cast<Eigen::Index>(energies.size()));
  for (std::size_t c = 0; c < energies.size(); ++c) {
    weights.col(static_cast<Eigen::Index>(c)) = wks_weights(spec, energies[c], sigma);
  }
  FeatureSet out{phi2 * weights, FeatureKind::WKS};
  normalize_columns(out.values, spec.mass());
  return out;
}

std::pair<std::vector<double>, double> default_wks_energies(const Spectrum& spec, int count) {
  if (spec.k() < 3) throw InvalidRangeError("default_wks_energies: need k >= 3");
  const double lo = std::log(spec.eigenvalues()[1]);
  const double hi = std::log(spec.eigenvalues()[spec.k() - 1]);
  std::vector<double> e(count);
  const double step = count > 1 ? (hi - lo) / (count - 1) : 1.0;
  for (int i = 0; i < count; ++i) e[i] = lo + i * step;
  return {e, 7.0 * step};
}

FeatureSet xyz(const TriMesh& mesh, const Eigen::VectorXd& mass) {
  if (mass.size() != mesh.vertex_count()) throw DimensionMismatchError("xyz: mass size mismatch");
  Eigen::MatrixXd values(mesh.vertex_count(), 3);
  for (int i = 0; i < mesh.vertex_count(); ++i) values.row(i) = mesh.vertices()[i].transpose();
  const Eigen::RowVector3d centre = (mass.transpose() * values) / mass.sum();
  values.rowwise() -= centre;
  normalize_columns(values, mass);
  return {values, FeatureKind::XYZ};
}

FeatureSet apply_transform(const FeatureSet& features, const FeatureTransform& transform) {
  if (transform.weights.rows() != features.dim()) {
    throw DimensionMismatchError("apply_transform: features have " + std::to_string(features.dim()) +
                                 " columns, transform expects " +
                                 std::to_string(transform.weights.rows()));
  }
  if (!transform.weights.allFinite()) throw NumericalError("apply_transform: non-finite weights");
  FeatureSet out{features.values * transform.weights, FeatureKind::Transformed};
  out.validate();
  return out;
}

FeatureSet concat(const FeatureSet& a, const FeatureSet& b) {
  if (a.vertex_count() != b.vertex_count()) throw DimensionMismatchError("concat: row count mismatch");
  FeatureSet out;
  out.values.resize(a.vertex_count(), a.dim() + b.dim());
  out.values << a.values, b.values;
  out.kind = FeatureKind::Custom;
  return out;
}

}  // namespace afmap
