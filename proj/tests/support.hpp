#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "afmap/mesh.hpp"
#include "afmap/shapes.hpp"
#include "afmap/spectral.hpp"

namespace testsupport {

/// Icosphere with radial jitter so no eigenvalue is repeated.
inline afmap::TriMesh bumpy_sphere(int level, std::uint64_t seed, double amplitude = 0.05) {
  const afmap::TriMesh base = afmap::shapes::icosphere(level);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  std::vector<afmap::Vec3> v = base.vertices();
  for (auto& p : v) p *= 1.0 + u(rng);
  return afmap::TriMesh(std::move(v), base.faces());
}

/// Flat grid with jittered interior vertices.
inline afmap::TriMesh jittered_grid(int n, std::uint64_t seed, double amplitude = 0.2) {
  const afmap::TriMesh base = afmap::shapes::grid(n, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude / n, amplitude / n);
  std::vector<afmap::Vec3> v = base.vertices();
  for (auto& p : v) {
    if (p.x() > 0 && p.x() < 1 && p.y() > 0 && p.y() < 1) {
      p.x() += u(rng);
      p.y() += u(rng);
    }
    p.z() += u(rng);
  }
  return afmap::TriMesh(std::move(v), base.faces());
}

struct DenseEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // M-orthonormal columns, ascending
};

/// Dense generalized eigensolver on the same stiffness and mass.
inline DenseEigen dense_oracle(const afmap::Operators& ops) {
  const Eigen::MatrixXd K = Eigen::MatrixXd(ops.stiffness);
  const Eigen::MatrixXd M = ops.mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Flips each column so its largest-magnitude entry is positive.
inline Eigen::MatrixXd sign_fixed(Eigen::MatrixXd a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::Index arg = 0;
    a.col(j).cwiseAbs().maxCoeff(&arg);
    if (a(arg, j) < 0) a.col(j) *= -1.0;
  }
  return a;
}

inline Eigen::VectorXd random_times(int k, std::mt19937_64& rng, double hi = 2.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Eigen::VectorXd t(k);
  for (int i = 0; i < k; ++i) t[i] = u(rng);
  return t;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("afmap-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace testsupport
