#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace speclabel {

// Simple undirected graph on vertices 0..n-1. Immutable after construction:
// the canonical edge list (u < v, sorted) and per-vertex adjacency are built
// once and shared freely across threads.
class Graph {
 public:
  // Validates and canonicalizes an edge list. Throws std::invalid_argument on
  // out-of-range endpoints, self-loops or duplicate edges.
  static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);

  int num_vertices() const { return n_; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(edges_.size()); }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  const std::vector<int>& neighbors(int v) const { return adjacency_[v]; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool is_connected() const;

 private:
  Graph() = default;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;    // u < v, lexicographically sorted
  std::vector<std::vector<int>> adjacency_;   // sorted neighbor lists
};

// Path graph: vertices 0..n-1, edges {i, i+1}. Requires n >= 2.
Graph build_path(int n);

// nx*ny*nt grid: 4-neighborhood inside each of the nt frames plus links
// between the same pixel in consecutive frames. Vertex ids follow
// grid3d_vertex: column fastest, then row, then frame.
Graph build_grid3d(int nx, int ny, int nt);
inline int grid3d_vertex(int nx, int ny, int col, int row, int frame) {
  return frame * nx * ny + row * nx + col;
}

// Small-world graph: start from the n-cycle, visit edges in sorted order and
// with probability rewire_prob replace the larger endpoint by a uniformly
// random vertex (attempts that would create a loop are discarded and the
// original edge kept). Duplicate edges are then removed and the largest
// connected component, relabeled 0..m-1, is returned.
Graph build_watts_strogatz(int n, double rewire_prob, std::mt19937_64& rng);

// Union-symmetrized k-nearest-neighbour graph of the rows of `features`
// under Euclidean distance. Distance ties break toward the lower index.
// Warns on stderr (and proceeds) if the result is disconnected.
Graph build_knn_graph(const Eigen::MatrixXd& features, int k);

// Positive semi-definite combinatorial Laplacian: degree on the diagonal,
// -1 per edge off the diagonal.
Eigen::SparseMatrix<double> laplacian(const Graph& g);

struct ComponentResult {
  Graph graph;                       // induced subgraph, relabeled 0..m-1
  std::vector<int> original_vertex;  // new id -> old id, ascending
};

// Largest connected component; size ties go to the component containing the
// smallest original vertex index. Relabeling preserves the original order.
ComponentResult largest_connected_component(const Graph& g);

// Edge-list text format: one "u v" pair per line, 1-based vertex ids.
// The vertex count of a read graph is the largest id seen, so isolated
// vertices do not survive a round trip.
void write_edge_list(const Graph& g, std::ostream& out);
Graph read_edge_list(std::istream& in);
void write_edge_list_file(const Graph& g, const std::string& path);
Graph read_edge_list_file(const std::string& path);

}  // namespace speclabel
