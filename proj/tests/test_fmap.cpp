#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>

#include "doctest.h"

#include "afmap/bench.hpp"
#include "afmap/error.hpp"
#include "afmap/fmap.hpp"
#include "afmap/pointwise.hpp"
#include "support.hpp"

using namespace afmap;

namespace {

struct PermutedPair {
  SyntheticPair pair;
  std::shared_ptr<const Spectrum> sx, sy;
};

PermutedPair permuted_pair(std::uint64_t seed, int k, int level = 2) {
  Deformation d;
  d.kind = Deformation::Kind::Permutation;
  SyntheticPair p = make_synthetic_pair(testsupport::bumpy_sphere(level, seed), d, seed + 100);
  auto sx = std::make_shared<const Spectrum>(eigendecompose(build_operators(p.x), k));
  auto sy = std::make_shared<const Spectrum>(eigendecompose(build_operators(p.y), k));
  return {std::move(p), sx, sy};
}

}  // namespace

TEST_CASE("solver: identity on a self pair") {
  const auto spec = std::make_shared<const Spectrum>(
      eigendecompose(build_operators(testsupport::bumpy_sphere(2, 1)), 10));
  const LearnableBasis b = make_basis(spec, InhibitionFilter(10));
  std::mt19937_64 rng(4);
  const FeatureSet f{spec->phi() * testsupport::random_matrix(10, 20, rng), FeatureKind::Custom};
  const FunctionalMap c = fmap_solve(f, f, b, b, 10, 0.0);
  CHECK((c.C - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(c.direction == MapDirection::XtoY);
}

TEST_CASE("solver equals projection under conditions (a)-(c)") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const int k = 12;
    const PermutedPair pp = permuted_pair(20 + trial, k);
    const Eigen::MatrixXd r = testsupport::random_matrix(k, 2 * k, rng);
    const FeatureSet fx{pp.sx->phi() * r, FeatureKind::Custom};
    const FeatureSet fy{pp.pair.gt.apply(fx.values), FeatureKind::Custom};
    for (bool random_t : {false, true}) {
      const InhibitionFilter filt = random_t ? InhibitionFilter(testsupport::random_times(k, rng)) : InhibitionFilter(k);
      const auto [bx, by] = shared_filter_pair(pp.sx, pp.sy, filt);
      const FunctionalMap solved = fmap_solve(fx, fy, bx, by, k, 0.0);
      const FunctionalMap projected = fmap_project(pp.pair.gt, bx, by, k);
      CHECK((solved.C - projected.C).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("solver: stationarity and the regularization path") {
  const auto sx = std::make_shared<const Spectrum>(eigendecompose(build_operators(testsupport::bumpy_sphere(2, 1)), 8));
  const auto sy = std::make_shared<const Spectrum>(eigendecompose(build_operators(testsupport::bumpy_sphere(2, 2)), 8));
  std::mt19937_64 rng(1);
  const auto [bx, by] = shared_filter_pair(sx, sy, InhibitionFilter(testsupport::random_times(8, rng, 1.0)));
  const FeatureSet fx{sx->phi() * testsupport::random_matrix(8, 16, rng), FeatureKind::Custom};
  const FeatureSet fy{sy->phi() * testsupport::random_matrix(8, 16, rng), FeatureKind::Custom};
  const Eigen::MatrixXd B = bx.pinv() * fx.values;
  const Eigen::MatrixXd A = by.pinv() * fy.values;
  const Eigen::MatrixXd lx = sx->eigenvalues().asDiagonal();
  const Eigen::MatrixXd ly = sy->eigenvalues().asDiagonal();

  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 1e-3, 1.0, 1e3}) {
    const Eigen::MatrixXd C = fmap_solve(fx, fy, bx, by, 8, lambda).C;
    // Zero gradient of ‖CB − A‖² + λ‖CΛ_X − Λ_Y C‖².
    const Eigen::MatrixXd comm = C * lx - ly * C;
    const Eigen::MatrixXd grad = (C * B - A) * B.transpose() + lambda * (comm * lx - ly * comm);
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-9 * (A * B.transpose()).cwiseAbs().maxCoeff());
    CHECK(comm.squaredNorm() <= previous * (1.0 + 1e-12));
    previous = comm.squaredNorm();
  }
}

TEST_CASE("solver errors") {
  const auto spec = std::make_shared<const Spectrum>(eigendecompose(build_operators(testsupport::bumpy_sphere(1, 1)), 8));
  const LearnableBasis b = make_basis(spec, InhibitionFilter(8));
  std::mt19937_64 rng(2);
  const FeatureSet narrow{spec->phi() * testsupport::random_matrix(8, 3, rng), FeatureKind::Custom};
  CHECK_THROWS_AS(fmap_solve(narrow, narrow, b, b, 8, 0.0), SingularSystemError);
  const FeatureSet other{spec->phi() * testsupport::random_matrix(8, 4, rng), FeatureKind::Custom};
  CHECK_THROWS_AS(fmap_solve(narrow, other, b, b, 8, 0.0), DimensionMismatchError);
  CHECK_THROWS_AS(fmap_solve(narrow, narrow, b, b, 9, 0.0), InvalidRangeError);
  CHECK_THROWS_AS(fmap_solve(narrow, narrow, b, b, 8, -1.0), InvalidRangeError);
}

TEST_CASE("projection: identity, isometry, soft maps, linearity") {
  const PermutedPair pp = permuted_pair(3, 10);
  const auto [bx, by] = shared_filter_pair(pp.sx, pp.sy, InhibitionFilter(10));
  const int n = pp.pair.x.vertex_count();

  std::vector<int> id(n);
  std::iota(id.begin(), id.end(), 0);
  const PointwiseMap ident = PointwiseMap::hard(id, n);
  CHECK((fmap_project(ident, bx, bx, 10).C - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-12);

  const FunctionalMap iso = fmap_project(pp.pair.gt, bx, by, 10);
  CHECK((iso.C * iso.C.transpose() - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-6);

  const PointwiseMap uniform = PointwiseMap::soft(Eigen::MatrixXd::Constant(n, n, 1.0 / n));
  const Eigen::MatrixXd brute = by.pinv(10) * (Eigen::MatrixXd::Constant(n, n, 1.0 / n) * bx.psi(10));
  CHECK((fmap_project(uniform, bx, by, 10).C - brute).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::MatrixXd mix = 0.3 * pp.pair.gt.dense() + 0.7 * Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd lin = 0.3 * iso.C + 0.7 * fmap_project(uniform, bx, by, 10).C;
  CHECK((fmap_project(PointwiseMap::soft(mix), bx, by, 10).C - lin).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_THROWS_AS(fmap_project(PointwiseMap::hard({0, 1}, n), bx, by, 10), DimensionMismatchError);
}

TEST_CASE("energies") {
  const auto I = [](int k) { return FunctionalMap{Eigen::MatrixXd::Identity(k, k), MapDirection::XtoY}; };
  CHECK(energy_bijectivity(I(6), I(6)) == 0.0);
  FunctionalMap two = I(10);
  two.C *= 2.0;
  CHECK(energy_bijectivity(two, I(10)) == doctest::Approx(10.0));
  FunctionalMap d2 = I(5);
  d2.C *= 2.0;
  CHECK(energy_orthogonality(d2) == doctest::Approx(45.0));
  const Eigen::Matrix2d rot = Eigen::Rotation2Dd(0.4).toRotationMatrix();
  CHECK(energy_orthogonality({rot, MapDirection::XtoY}) <= 1e-30);

  std::mt19937_64 rng(6);
  const Eigen::MatrixXd a = testsupport::random_matrix(7, 7, rng), b = testsupport::random_matrix(7, 7, rng);
  double oracle_bi = 0.0, oracle_or = 0.0;
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      double ab = 0.0, aat = 0.0;
      for (int m = 0; m < 7; ++m) {
        ab += a(i, m) * b(m, j);
        aat += a(i, m) * a(j, m);
      }
      oracle_bi += std::pow(ab - (i == j), 2);
      oracle_or += std::pow(aat - (i == j), 2);
    }
  }
  CHECK(energy_bijectivity({a, MapDirection::XtoY}, {b, MapDirection::YtoX}) ==
        doctest::Approx(oracle_bi).epsilon(1e-12));
  CHECK(energy_orthogonality({a, MapDirection::XtoY}) == doctest::Approx(oracle_or).epsilon(1e-12));
  CHECK_THROWS_AS(energy_bijectivity(I(3), I(4)), DimensionMismatchError);

  const PermutedPair pp = permuted_pair(5, 8, 1);
  const auto [bx, by] = shared_filter_pair(pp.sx, pp.sy, InhibitionFilter(8));
  const FunctionalMap proj = fmap_project(pp.pair.gt, bx, by, 8);
  CHECK(energy_coupling(proj, pp.pair.gt, bx, by) == 0.0);
  const FunctionalMap zero{Eigen::MatrixXd::Zero(8, 8), MapDirection::XtoY};
  CHECK(energy_coupling(zero, pp.pair.gt, bx, by) == doctest::Approx(proj.C.squaredNorm()));
  const FunctionalMap rnd{testsupport::random_matrix(8, 8, rng), MapDirection::XtoY};
  CHECK(energy_coupling(rnd, pp.pair.gt, bx, by) == doctest::Approx((rnd.C - proj.C).squaredNorm()));

  std::vector<int> id(pp.pair.x.vertex_count());
  std::iota(id.begin(), id.end(), 0);
  const PointwiseMap self = PointwiseMap::hard(id, pp.pair.x.vertex_count());
  const FunctionalMap c_self = fmap_project(self, bx, bx, 8);
  CHECK(energy_orthogonality(c_self) <= 1e-20);
  CHECK(energy_bijectivity(c_self, c_self) <= 1e-20);
  CHECK(energy_coupling(c_self, self, bx, bx) == 0.0);
}
