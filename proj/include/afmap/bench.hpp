#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "afmap/descriptors.hpp"
#include "afmap/fmap.hpp"
#include "afmap/learn.hpp"
#include "afmap/mesh.hpp"
#include "afmap/pointwise.hpp"

namespace afmap {

struct EvalReport {
  /// Per Y-vertex geodesic error on X, divided by √area(X).
  Eigen::VectorXd errors;
  double mean_error = 0.0;
  std::vector<double> pck_thresholds;  // 0, 0.01, ..., 0.25
  std::vector<double> pck;

  // Pipeline metadata; empty when produced by geodesic_error alone.
  std::string variant;
  int k = 0;
  int k_init = 0;
  int k_end = 0;
  int k_step = 0;
  double alpha = 0.0;
  std::string t_hash;
  bool refined = false;

  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  double total_seconds = 0.0;
};

/// Fraction of errors ≤ each threshold.
std::vector<double> pck_curve(const Eigen::VectorXd& errors, const std::vector<double>& thresholds);
std::vector<double> default_pck_thresholds();

/// Graph-geodesic distance on `source_mesh` between pred(y) and gt(y) for every
/// Y-vertex. Throws DimensionMismatchError or DisconnectedMeshError.
EvalReport geodesic_error(const PointwiseMap& pred, const PointwiseMap& gt, const TriMesh& source_mesh);

struct Deformation {
  enum class Kind { Permutation, NoisyPermutation, NonIsometricScale };
  Kind kind = Kind::Permutation;
  /// Gaussian noise per coordinate as a fraction of the bounding-box diagonal.
  double sigma = 0.0;
  Eigen::Vector3d factors = Eigen::Vector3d::Ones();
  /// false keeps the vertex order (identity ground truth).
  bool permute = true;
};

struct SyntheticPair {
  TriMesh x;
  TriMesh y;
  /// Y-vertex j corresponds to X-vertex gt.indices()[j].
  PointwiseMap gt;
  Deformation deformation;
};

SyntheticPair make_synthetic_pair(const TriMesh& base, const Deformation& deformation, std::uint64_t seed);

enum class BasisVariant { Fixed, Learned };
enum class FmapRoute { Solver, Projection };

struct Variant {
  BasisVariant basis = BasisVariant::Learned;
  FmapRoute route = FmapRoute::Projection;
  std::string name() const;
};

enum class DescriptorKind { HKS, WKS, XYZ, HKS_XYZ };
std::string to_string(DescriptorKind kind);
/// Throws InvalidRangeError on an unknown name.
DescriptorKind descriptor_kind_from_string(const std::string& name);

struct PipelineOptions {
  int k = 40;
  /// Rescale to unit area before computing spectra (only for shapes whose
  /// spectrum is not supplied).
  bool normalize = true;
  DescriptorKind descriptors = DescriptorKind::XYZ;
  int descriptor_count = 16;
  TrainConfig train;
  int fmap_k = 20;
  double lambda_reg = 1e-3;
  bool refine = true;
  int zoom_k_init = 20;
  int zoom_k_end = 40;
  int zoom_step = 1;
};

/// One side of a match. Missing spectrum or features are computed.
struct PipelineShape {
  TriMesh mesh;
  std::shared_ptr<const Spectrum> spectrum;
  std::optional<FeatureSet> features;
};

struct PipelineResult {
  PointwiseMap map;
  FunctionalMap fmap;
  TrainState state;
  std::vector<double> zoom_trace;
  /// Geodesic fields populated only when ground truth was supplied.
  EvalReport report;
};

std::shared_ptr<const Spectrum> compute_spectrum(const TriMesh& mesh, int k);
FeatureSet compute_descriptors(const TriMesh& mesh, const Spectrum& spec, DescriptorKind kind, int count);

/// descriptors → (train) → NN map in the learned feature space → functional
/// map (solver or projection) → recover → (G-ZoomOut) → geodesic error.
/// The fixed variant trains only the feature transform. A supplied
/// `pretrained` state replaces the training stage. Stage failures are
/// rethrown with the stage name prefixed.
PipelineResult run_pipeline(const PipelineShape& x, const PipelineShape& y, const PointwiseMap* gt,
                            const Variant& variant, const PipelineOptions& options,
                            const std::optional<TrainState>& pretrained = std::nullopt);

PipelineResult run_pipeline(const SyntheticPair& pair, const Variant& variant, const PipelineOptions& options);

/// Near-isometric benchmark: a unit-area 642-vertex icosphere against a
/// permuted copy with Gaussian vertex noise of 1% of the bounding-box diagonal.
SyntheticPair near_isometric_pair(std::uint64_t seed = 7);
/// Budget shared by every variant on that pair: 200 training iterations,
/// schedule {20, 30, 40}, projection at k = 20, G-ZoomOut 20 → 40.
PipelineOptions near_isometric_options();

/// Hex FNV-1a of the raw T values.
std::string hash_times(const Eigen::VectorXd& times);

}  // namespace afmap
