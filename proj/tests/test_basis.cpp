#include <cmath>
#include <memory>

#include "doctest.h"

#include "afmap/basis.hpp"
#include "afmap/error.hpp"
#include "support.hpp"

using namespace afmap;

namespace {

std::shared_ptr<const Spectrum> sphere_spectrum(std::uint64_t seed, int k = 20, int level = 2) {
  const TriMesh m = testsupport::bumpy_sphere(level, seed);
  return std::make_shared<const Spectrum>(eigendecompose(build_operators(m), k));
}

int sign_changes(const Eigen::VectorXd& v) {
  int count = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) count += (v[i] > 0) != (v[i - 1] > 0);
  return count;
}

}  // namespace

TEST_CASE("inhibition filter") {
  const InhibitionFilter id(5);
  CHECK(id.gains() == Eigen::VectorXd::Ones(5));
  CHECK_THROWS_AS(InhibitionFilter(Eigen::VectorXd::Constant(3, -0.1)), InvalidRangeError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(InhibitionFilter{bad}, InvalidRangeError);
}

TEST_CASE("identity and uniform inhibition") {
  const auto spec = sphere_spectrum(1);
  const LearnableBasis b0 = make_basis(spec, InhibitionFilter(spec->k()));
  CHECK(b0.psi() == spec->phi());
  CHECK(b0.pinv() == spec->pinv());

  const LearnableBasis half = make_basis(spec, InhibitionFilter(Eigen::VectorXd::Constant(spec->k(), std::log(2.0))));
  CHECK((half.psi() - spec->phi() / 2.0).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((half.pinv() - 2.0 * spec->pinv()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("invertibility, orthogonality and structure under random T") {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto spec = sphere_spectrum(seed);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd t = testsupport::random_times(spec->k(), rng);
      const LearnableBasis b = make_basis(spec, InhibitionFilter(t));
      const int k = b.k();
      CHECK((b.pinv() * b.psi() - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-8);
      const Eigen::MatrixXd gram = b.psi().transpose() * spec->mass().asDiagonal() * b.psi();
      Eigen::MatrixXd off = gram;
      off.diagonal().setZero();
      CHECK(off.cwiseAbs().maxCoeff() <= 1e-7);
      CHECK((gram.diagonal() - b.gains().cwiseAbs2()).cwiseAbs().maxCoeff() <= 1e-7);
      for (int i = 0; i < k; ++i) CHECK(sign_changes(b.psi().col(i)) == sign_changes(spec->phi().col(i)));

      const int kp = 7;
      CHECK((b.pinv(kp) * b.psi(kp) - Eigen::MatrixXd::Identity(kp, kp)).cwiseAbs().maxCoeff() <= 1e-8);

      const Eigen::MatrixXd conv = spectral_convolve(*spec, SpectralFilter::diagonal(b.gains()), spec->phi());
      CHECK((conv - b.psi()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("shared filter pairs") {
  const auto sx = sphere_spectrum(1);
  const auto sy = sphere_spectrum(2);
  const auto [a, b] = shared_filter_pair(sx, sx, InhibitionFilter(sx->k()));
  CHECK(a.psi() == b.psi());
  std::mt19937_64 rng(2);
  const InhibitionFilter f(testsupport::random_times(sx->k(), rng));
  const auto [bx, by] = shared_filter_pair(sx, sy, f);
  CHECK(bx.gains() == by.gains());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sx->k(), sx->k());
  CHECK((bx.pinv() * bx.psi() - I).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((by.pinv() * by.psi() - I).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(shared_filter_pair(sx, sy, InhibitionFilter(5)), DimensionMismatchError);
}

TEST_CASE("gain underflow") {
  const auto spec = sphere_spectrum(1, 4, 1);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(4);
  t[3] = 800.0;
  CHECK_THROWS_AS(make_basis(spec, InhibitionFilter(t)), GainUnderflowError);
  CHECK_THROWS_AS(make_basis(spec, InhibitionFilter(3)), DimensionMismatchError);
  CHECK_THROWS_AS(make_basis(spec, InhibitionFilter(4)).pinv(5), InvalidRangeError);
}
