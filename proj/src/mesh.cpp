#include "afmap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <string>

#include <Eigen/Geometry>

#include "afmap/error.hpp"

namespace afmap {

namespace {

constexpr double kDegenerateAreaFactor = 1e-12;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int n = vertex_count();
  if (n == 0) throw ParseError("mesh has no vertices");
  if (faces_.empty()) throw ParseError("mesh has no faces");
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw ParseError("non-finite vertex coordinate");
  }

  const double diag = bbox_diagonal();
  const double min_area = kDegenerateAreaFactor * diag * diag;
  std::map<std::pair<int, int>, int> edge_faces;
  for (int f = 0; f < face_count(); ++f) {
    const Face& t = faces_[f];
    for (int c = 0; c < 3; ++c) {
      if (t[c] < 0 || t[c] >= n) {
        throw ParseError("face " + std::to_string(f) + " references vertex " +
                         std::to_string(t[c]) + " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw DegenerateFaceError("face " + std::to_string(f) + " repeats a vertex");
    }
    if (!(face_area(f) > min_area)) {
      throw DegenerateFaceError("face " + std::to_string(f) + " has (near-)zero area");
    }
    for (int c = 0; c < 3; ++c) {
      int a = t[c], b = t[(c + 1) % 3];
      if (a > b) std::swap(a, b);
      if (++edge_faces[{a, b}] > 2) {
        throw NonManifoldError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                               ") is shared by more than two faces");
      }
    }
  }
}

double TriMesh::face_area(int f) const {
  const Face& t = faces_[f];
  const Vec3& a = vertices_[t[0]];
  return 0.5 * (vertices_[t[1]] - a).cross(vertices_[t[2]] - a).norm();
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int f = 0; f < face_count(); ++f) s += face_area(f);
  return s;
}

double TriMesh::bbox_diagonal() const {
  Vec3 lo = vertices_.front(), hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

std::vector<std::pair<int, int>> TriMesh::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(faces_.size() * 3);
  for (const Face& t : faces_) {
    for (int c = 0; c < 3; ++c) {
      int a = t[c], b = t[(c + 1) % 3];
      if (a > b) std::swap(a, b);
      out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t TriMesh::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t counts[2] = {vertices_.size(), faces_.size()};
  h = fnv1a(h, counts, sizeof(counts));
  for (const auto& v : vertices_) {
    const double xyz[3] = {v.x(), v.y(), v.z()};
    h = fnv1a(h, xyz, sizeof(xyz));
  }
  for (const auto& t : faces_) {
    const std::int32_t idx[3] = {t[0], t[1], t[2]};
    h = fnv1a(h, idx, sizeof(idx));
  }
  return h;
}

TriMesh normalize_area(const TriMesh& mesh) {
  const double s = 1.0 / std::sqrt(mesh.total_area());
  std::vector<Vec3> v = mesh.vertices();
  for (auto& p : v) p *= s;
  return TriMesh(std::move(v), mesh.faces());
}

Operators build_operators(const TriMesh& mesh, const OperatorOptions& opts) {
  const int n = mesh.vertex_count();
  const auto& V = mesh.vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.faces().size() * 12);

  Operators ops;
  ops.mass = Eigen::VectorXd::Zero(n);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces()[f];
    const double area = mesh.face_area(f);
    ops.total_area += area;
    for (int c = 0; c < 3; ++c) {
      ops.mass[t[c]] += area / 3.0;
      // corner c is opposite edge (i, j)
      const int i = t[(c + 1) % 3], j = t[(c + 2) % 3];
      const Vec3 u = V[i] - V[t[c]];
      const Vec3 w = V[j] - V[t[c]];
      double cot = u.dot(w) / u.cross(w).norm();
      if (!std::isfinite(cot)) {
        throw NumericalError("non-finite cotangent weight in face " + std::to_string(f));
      }
      if (opts.clamp_obtuse) cot = std::max(cot, 0.0);
      const double wij = -0.5 * cot;
      triplets.emplace_back(i, j, wij);
      triplets.emplace_back(j, i, wij);
      triplets.emplace_back(i, i, -wij);
      triplets.emplace_back(j, j, -wij);
    }
  }
  ops.stiffness.resize(n, n);
  ops.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  ops.stiffness.makeCompressed();
  return ops;
}

bool is_connected(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n;
  for (const Face& t : mesh.faces()) {
    for (int c = 0; c < 3; ++c) {
      const int a = find(t[c]), b = find(t[(c + 1) % 3]);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
  }
  return components == 1;
}

}  // namespace afmap
