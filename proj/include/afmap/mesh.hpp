#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace afmap {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

enum class MeshFormat { OFF, OBJ, PLY };

/// Triangle mesh. Vertex order is significant: correspondences are expressed
/// as file-order vertex indices.
class TriMesh {
 public:
  TriMesh() = default;

  /// Validates on construction; throws ParseError / DegenerateFaceError /
  /// NonManifoldError.
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }

  double face_area(int f) const;
  double total_area() const;
  double bbox_diagonal() const;

  /// Undirected edges (i < j), sorted.
  std::vector<std::pair<int, int>> edges() const;

  /// 64-bit FNV-1a over vertex coordinates and face indices.
  std::uint64_t content_hash() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
};

struct Operators {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd mass;  // lumped diagonal
  double total_area = 0.0;
};

struct OperatorOptions {
  /// Clamp negative cotangent weights (obtuse angles) to zero.
  bool clamp_obtuse = false;
};

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format from extension (.off / .obj / .ply).
TriMesh load_mesh(const std::filesystem::path& path);
void write_off(const TriMesh& mesh, const std::filesystem::path& path);

/// Uniformly rescales the mesh about the origin to unit total area.
TriMesh normalize_area(const TriMesh& mesh);

Operators build_operators(const TriMesh& mesh, const OperatorOptions& opts = {});

bool is_connected(const TriMesh& mesh);

/// Row s: edge-graph Dijkstra distances from sources[s] to every vertex.
Eigen::MatrixXd geodesic_matrix(const TriMesh& mesh, std::span<const int> sources);

}  // namespace afmap
