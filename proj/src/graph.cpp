#include "speclabel/graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace speclabel {

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw std::invalid_argument("graph: vertex count must be positive");
  for (auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (u == v) throw std::invalid_argument("graph: self-loop not allowed");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("graph: duplicate edge");

  Graph g;
  g.n_ = n;
  g.adjacency_.resize(n);
  for (const auto& [u, v] : edges) {
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  for (auto& nbrs : g.adjacency_) std::sort(nbrs.begin(), nbrs.end());
  g.edges_ = std::move(edges);
  return g;
}

bool Graph::is_connected() const {
  if (n_ <= 1) return true;
  std::vector<char> seen(n_, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n_;
}

Graph build_path(int n) {
  if (n < 2) throw std::invalid_argument("build_path: need at least 2 vertices");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(n - 1);
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::from_edges(n, std::move(edges));
}

Graph build_grid3d(int nx, int ny, int nt) {
  if (nx < 1 || ny < 1 || nt < 1)
    throw std::invalid_argument("build_grid3d: all dimensions must be positive");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(3) * nx * ny * nt);
  for (int t = 0; t < nt; ++t) {
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) {
        int v = grid3d_vertex(nx, ny, c, r, t);
        if (c + 1 < nx) edges.emplace_back(v, grid3d_vertex(nx, ny, c + 1, r, t));
        if (r + 1 < ny) edges.emplace_back(v, grid3d_vertex(nx, ny, c, r + 1, t));
        if (t + 1 < nt) edges.emplace_back(v, grid3d_vertex(nx, ny, c, r, t + 1));
      }
    }
  }
  return Graph::from_edges(nx * ny * nt, std::move(edges));
}

Graph build_watts_strogatz(int n, double rewire_prob, std::mt19937_64& rng) {
  if (n < 3) throw std::invalid_argument("build_watts_strogatz: need at least 3 vertices");
  if (!(rewire_prob >= 0.0 && rewire_prob <= 1.0))
    throw std::invalid_argument("build_watts_strogatz: rewire probability must be in [0,1]");

  std::vector<std::pair<int, int>> ring;
  ring.reserve(n);
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    ring.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(ring.begin(), ring.end());

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<std::pair<int, int>> rewired;
  rewired.reserve(n);
  for (auto [u, v] : ring) {
    if (unif(rng) < rewire_prob) {
      int w = pick(rng);
      if (w != u) v = w;  // loop-creating rewirings are discarded
      if (u > v) std::swap(u, v);
    }
    rewired.emplace_back(u, v);
  }
  std::sort(rewired.begin(), rewired.end());
  rewired.erase(std::unique(rewired.begin(), rewired.end()), rewired.end());

  Graph g = Graph::from_edges(n, std::move(rewired));
  return largest_connected_component(g).graph;
}

Graph build_knn_graph(const Eigen::MatrixXd& features, int k) {
  const int n = static_cast<int>(features.rows());
  if (k < 1) throw std::invalid_argument("build_knn_graph: k must be positive");
  if (n < k + 1) throw std::invalid_argument("build_knn_graph: need at least k+1 points");
  if (!features.allFinite())
    throw std::invalid_argument("build_knn_graph: features must be finite");

  const Eigen::VectorXd sq = features.rowwise().squaredNorm();
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * k);

  // Blockwise squared distances via the Gram expansion keeps memory at
  // block x n instead of n x n.
  const int block = 256;
  Eigen::MatrixXd dist;
  std::vector<std::pair<double, int>> row(n);
  for (int start = 0; start < n; start += block) {
    const int rows = std::min(block, n - start);
    dist.noalias() = -2.0 * features.middleRows(start, rows) * features.transpose();
    for (int bi = 0; bi < rows; ++bi) {
      const int i = start + bi;
      int count = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        row[count++] = {dist(bi, j) + sq[i] + sq[j], j};
      }
      std::partial_sort(row.begin(), row.begin() + k, row.begin() + count);
      for (int s = 0; s < k; ++s) {
        int j = row[s].second;
        edges.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g = Graph::from_edges(n, std::move(edges));
  if (!g.is_connected())
    std::cerr << "build_knn_graph: warning: graph with k=" << k << " is disconnected\n";
  return g;
}

Eigen::SparseMatrix<double> laplacian(const Graph& g) {
  const int n = g.num_vertices();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) + 2 * g.num_edges());
  for (int v = 0; v < n; ++v) trips.emplace_back(v, v, static_cast<double>(g.degree(v)));
  for (const auto& [u, v] : g.edges()) {
    trips.emplace_back(u, v, -1.0);
    trips.emplace_back(v, u, -1.0);
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return L;
}

ComponentResult largest_connected_component(const Graph& g) {
  const int n = g.num_vertices();
  std::vector<int> component(n, -1);
  std::vector<int> size_of;
  for (int start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(size_of.size());
    int count = 0;
    std::queue<int> q;
    q.push(start);
    component[start] = id;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      ++count;
      for (int v : g.neighbors(u)) {
        if (component[v] < 0) {
          component[v] = id;
          q.push(v);
        }
      }
    }
    size_of.push_back(count);
  }
  // Components are discovered in order of their smallest vertex, so a strict
  // comparison implements the smallest-index tie-break.
  int best = 0;
  for (int id = 1; id < static_cast<int>(size_of.size()); ++id)
    if (size_of[id] > size_of[best]) best = id;

  std::vector<int> original_vertex;
  std::vector<int> new_id(n, -1);
  for (int v = 0; v < n; ++v) {
    if (component[v] == best) {
      new_id[v] = static_cast<int>(original_vertex.size());
      original_vertex.push_back(v);
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [u, v] : g.edges())
    if (component[u] == best && component[v] == best)
      edges.emplace_back(new_id[u], new_id[v]);
  Graph sub = Graph::from_edges(static_cast<int>(original_vertex.size()), std::move(edges));
  return ComponentResult{std::move(sub), std::move(original_vertex)};
}

void write_edge_list(const Graph& g, std::ostream& out) {
  for (const auto& [u, v] : g.edges()) out << (u + 1) << ' ' << (v + 1) << '\n';
}

Graph read_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  int n = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    long long u, v;
    if (!(ss >> u >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw std::invalid_argument("edge list: malformed line " + std::to_string(lineno));
    }
    std::string rest;
    if (ss >> rest)
      throw std::invalid_argument("edge list: trailing tokens on line " + std::to_string(lineno));
    if (u < 1 || v < 1)
      throw std::invalid_argument("edge list: ids are 1-based, line " + std::to_string(lineno));
    n = std::max(n, static_cast<int>(std::max(u, v)));
    edges.emplace_back(static_cast<int>(u - 1), static_cast<int>(v - 1));
  }
  if (edges.empty()) throw std::invalid_argument("edge list: no edges");
  return Graph::from_edges(n, std::move(edges));
}

void write_edge_list_file(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_edge_list(g, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_edge_list(in);
}

}  // namespace speclabel
