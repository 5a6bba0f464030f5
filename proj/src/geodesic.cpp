#include <limits>
#include <queue>
#include <string>

#include "afmap/error.hpp"
#include "afmap/mesh.hpp"

namespace afmap {

Eigen::MatrixXd geodesic_matrix(const TriMesh& mesh, std::span<const int> sources) {
  const int n = mesh.vertex_count();
  if (sources.empty()) throw InvalidRangeError("geodesic_matrix: no sources");
  for (int s : sources) {
    if (s < 0 || s >= n) throw InvalidRangeError("geodesic_matrix: source " + std::to_string(s) + " out of range");
  }

  // CSR adjacency with Euclidean edge lengths.
  const auto edges = mesh.edges();
  std::vector<int> offset(n + 1, 0);
  for (const auto& [a, b] : edges) {
    ++offset[a + 1];
    ++offset[b + 1];
  }
  for (int i = 0; i < n; ++i) offset[i + 1] += offset[i];
  std::vector<int> nbr(offset[n]);
  std::vector<double> len(offset[n]);
  std::vector<int> fill(offset.begin(), offset.end() - 1);
  for (const auto& [a, b] : edges) {
    const double l = (mesh.vertices()[a] - mesh.vertices()[b]).norm();
    nbr[fill[a]] = b;
    len[fill[a]++] = l;
    nbr[fill[b]] = a;
    len[fill[b]++] = l;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(sources.size()), n);
  using Item = std::pair<double, int>;
  std::vector<double> dist(n);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    std::fill(dist.begin(), dist.end(), inf);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[sources[s]] = 0.0;
    heap.emplace(0.0, sources[s]);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (int e = offset[u]; e < offset[u + 1]; ++e) {
        const double nd = d + len[e];
        if (nd < dist[nbr[e]]) {
          dist[nbr[e]] = nd;
          heap.emplace(nd, nbr[e]);
        }
      }
    }
    for (int v = 0; v < n; ++v) {
      if (dist[v] == inf) {
        throw DisconnectedMeshError("vertex " + std::to_string(v) + " unreachable from vertex " +
                                    std::to_string(sources[s]));
      }
      out(static_cast<Eigen::Index>(s), v) = dist[v];
    }
  }
  return out;
}

}  // namespace afmap
