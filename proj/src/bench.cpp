#include "afmap/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <unordered_map>

#include "afmap/error.hpp"
#include "afmap/shapes.hpp"
#include "afmap/spectral.hpp"

namespace afmap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto timed_stage(const char* name, EvalReport& report, F&& fn) {
  const auto t0 = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      report.timings.emplace_back(name, seconds_since(t0));
    } else {
      auto value = fn();
      report.timings.emplace_back(name, seconds_since(t0));
      return value;
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

}  // namespace

std::vector<double> default_pck_thresholds() {
  std::vector<double> t(26);
  for (int i = 0; i <= 25; ++i) t[i] = i / 100.0;
  return t;
}

std::vector<double> pck_curve(const Eigen::VectorXd& errors, const std::vector<double>& thresholds) {
  std::vector<double> sorted(errors.data(), errors.data() + errors.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto hit = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.push_back(sorted.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(sorted.size()));
  }
  return out;
}

EvalReport geodesic_error(const PointwiseMap& pred, const PointwiseMap& gt, const TriMesh& source_mesh) {
  if (!pred.is_hard() || !gt.is_hard()) throw DimensionMismatchError("geodesic_error: maps must be hard");
  if (pred.target_count() != gt.target_count() || pred.source_count() != source_mesh.vertex_count() ||
      gt.source_count() != source_mesh.vertex_count()) {
    throw DimensionMismatchError("geodesic_error: maps do not target the same mesh");
  }
  std::vector<int> sources = gt.indices();
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::unordered_map<int, int> row_of;
  for (std::size_t i = 0; i < sources.size(); ++i) row_of[sources[i]] = static_cast<int>(i);
  const Eigen::MatrixXd dist = geodesic_matrix(source_mesh, sources);
  const double scale = 1.0 / std::sqrt(source_mesh.total_area());

  EvalReport r;
  const int n = gt.target_count();
  r.errors.resize(n);
  for (int j = 0; j < n; ++j) {
    r.errors[j] = dist(row_of.at(gt.indices()[j]), pred.indices()[j]) * scale;
  }
  r.mean_error = n > 0 ? r.errors.mean() : 0.0;
  r.pck_thresholds = default_pck_thresholds();
  r.pck = pck_curve(r.errors, r.pck_thresholds);
  return r;
}

SyntheticPair make_synthetic_pair(const TriMesh& base, const Deformation& deformation, std::uint64_t seed) {
  const int n = base.vertex_count();
  std::mt19937_64 rng(seed);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (deformation.permute) std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> inv(n);
  for (int j = 0; j < n; ++j) inv[perm[j]] = j;

  std::vector<Vec3> verts(n);
  const double noise = deformation.kind == Deformation::Kind::NoisyPermutation
                           ? deformation.sigma * base.bbox_diagonal()
                           : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    Vec3 p = base.vertices()[perm[j]];
    if (deformation.kind == Deformation::Kind::NonIsometricScale) p = p.cwiseProduct(deformation.factors);
    if (noise > 0.0) {
      const double a = gauss(rng), b = gauss(rng), c = gauss(rng);
      p += noise * Vec3(a, b, c);
    }
    verts[j] = p;
  }
  std::vector<Face> faces;
  faces.reserve(base.faces().size());
  for (const Face& f : base.faces()) faces.push_back({inv[f[0]], inv[f[1]], inv[f[2]]});

  return {base, TriMesh(std::move(verts), std::move(faces)), PointwiseMap::hard(perm, n), deformation};
}

std::string Variant::name() const {
  return std::string(basis == BasisVariant::Fixed ? "fixed" : "learned") + "/" +
         (route == FmapRoute::Solver ? "solver" : "projection");
}

std::string to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::HKS: return "hks";
    case DescriptorKind::WKS: return "wks";
    case DescriptorKind::XYZ: return "xyz";
    case DescriptorKind::HKS_XYZ: return "hks+xyz";
  }
  return "?";
}

DescriptorKind descriptor_kind_from_string(const std::string& name) {
  for (auto k : {DescriptorKind::HKS, DescriptorKind::WKS, DescriptorKind::XYZ, DescriptorKind::HKS_XYZ}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidRangeError("unknown descriptor kind '" + name + "'");
}

std::shared_ptr<const Spectrum> compute_spectrum(const TriMesh& mesh, int k) {
  return std::make_shared<const Spectrum>(eigendecompose(build_operators(mesh), k, {}, mesh.content_hash()));
}

FeatureSet compute_descriptors(const TriMesh& mesh, const Spectrum& spec, DescriptorKind kind, int count) {
  FeatureSet out;
  switch (kind) {
    case DescriptorKind::HKS: out = hks(spec, default_hks_times(spec, count)); break;
    case DescriptorKind::WKS: {
      const auto [energies, sigma] = default_wks_energies(spec, count);
      out = wks(spec, energies, sigma);
      break;
    }
    case DescriptorKind::XYZ: out = xyz(mesh, spec.mass()); break;
    case DescriptorKind::HKS_XYZ:
      out = concat(hks(spec, default_hks_times(spec, count)), xyz(mesh, spec.mass()));
      break;
  }
  out.validate();
  return out;
}

std::string hash_times(const Eigen::VectorXd& times) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(times.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(times.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineResult run_pipeline(const PipelineShape& x, const PipelineShape& y, const PointwiseMap* gt,
                            const Variant& variant, const PipelineOptions& options,
                            const std::optional<TrainState>& pretrained) {
  const auto t_start = Clock::now();
  EvalReport report;

  const TriMesh mx = options.normalize && !x.spectrum ? normalize_area(x.mesh) : x.mesh;
  const TriMesh my = options.normalize && !y.spectrum ? normalize_area(y.mesh) : y.mesh;

  auto [sx, sy] = timed_stage("spectra", report, [&] {
    auto a = x.spectrum ? x.spectrum : compute_spectrum(mx, options.k);
    auto b = y.spectrum ? y.spectrum : compute_spectrum(my, options.k);
    if (a->k() != b->k()) throw DimensionMismatchError("spectra have different orders");
    return std::pair{a, b};
  });

  auto [fx, fy] = timed_stage("descriptors", report, [&] {
    FeatureSet a = x.features ? *x.features
                              : compute_descriptors(mx, *sx, options.descriptors, options.descriptor_count);
    FeatureSet b = y.features ? *y.features
                              : compute_descriptors(my, *sy, options.descriptors, options.descriptor_count);
    if (a.dim() != b.dim()) throw DimensionMismatchError("descriptor dimensions differ");
    return std::pair{a, b};
  });

  PipelineResult result{PointwiseMap::hard({}, 0), {}, {}, {}, {}};
  result.state = timed_stage("train", report, [&] {
    if (pretrained) return *pretrained;
    TrainConfig cfg = options.train;
    if (variant.basis == BasisVariant::Fixed) cfg.learn_basis = false;
    auto bx = std::make_shared<const ShapeBundle>(ShapeBundle{"x", sx, fx});
    auto by = std::make_shared<const ShapeBundle>(ShapeBundle{"y", sy, fy});
    return train({ShapePair{bx, by}}, cfg, TrainState::initial(sx->k(), fx.dim()));
  });
  if (variant.basis == BasisVariant::Fixed) result.state.filter = InhibitionFilter(sx->k());

  const auto [bx, by] = shared_filter_pair(sx, sy, result.state.filter);

  auto [ex, ey] = timed_stage("features", report, [&] {
    return std::pair{apply_transform(fx, result.state.transform), apply_transform(fy, result.state.transform)};
  });

  const PointwiseMap initial = timed_stage("initial_map", report, [&] { return nn_map(ey.values, ex.values); });

  result.fmap = timed_stage("fmap", report, [&] {
    return variant.route == FmapRoute::Solver ? fmap_solve(ex, ey, bx, by, options.fmap_k, options.lambda_reg)
                                              : fmap_project(initial, bx, by, options.fmap_k);
  });

  result.map = timed_stage("recover", report, [&] { return recover_map(result.fmap, bx, by); });

  if (options.refine) {
    timed_stage("zoomout", report, [&] {
      ZoomOutResult z = g_zoomout(result.map, bx, by, options.zoom_k_init, options.zoom_k_end, options.zoom_step);
      result.map = std::move(z.map);
      result.zoom_trace = std::move(z.energy_trace);
    });
  }

  if (gt) {
    const EvalReport geo = timed_stage("eval", report, [&] { return geodesic_error(result.map, *gt, mx); });
    report.errors = geo.errors;
    report.mean_error = geo.mean_error;
    report.pck_thresholds = geo.pck_thresholds;
    report.pck = geo.pck;
  }

  report.variant = variant.name();
  report.k = sx->k();
  report.k_init = options.train.k_init;
  report.k_end = options.train.k_end;
  report.k_step = options.train.k_step;
  report.alpha = options.train.alpha;
  report.t_hash = hash_times(result.state.filter.times());
  report.refined = options.refine;
  report.total_seconds = seconds_since(t_start);
  result.report = std::move(report);
  return result;
}

PipelineResult run_pipeline(const SyntheticPair& pair, const Variant& variant, const PipelineOptions& options) {
  return run_pipeline(PipelineShape{pair.x, nullptr, std::nullopt}, PipelineShape{pair.y, nullptr, std::nullopt},
                      &pair.gt, variant, options);
}

SyntheticPair near_isometric_pair(std::uint64_t seed) {
  Deformation d;
  d.kind = Deformation::Kind::NoisyPermutation;
  d.sigma = 0.01;
  return make_synthetic_pair(normalize_area(shapes::icosphere(3)), d, seed);
}

PipelineOptions near_isometric_options() {
  PipelineOptions o;
  o.k = 40;
  o.descriptors = DescriptorKind::XYZ;
  o.train.iterations = 200;
  o.train.k_init = 20;
  o.train.k_end = 40;
  o.train.k_step = 10;
  o.fmap_k = 20;
  o.refine = true;
  o.zoom_k_init = 20;
  o.zoom_k_end = 40;
  o.zoom_step = 1;
  return o;
}

}  // namespace afmap
