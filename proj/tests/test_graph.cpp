#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "speclabel/graph.hpp"

using namespace speclabel;

namespace {

// Simplicity scan used by several builder tests.
void check_simple(const Graph& g) {
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : g.edges()) {
    CHECK(u < v);
    CHECK(u >= 0);
    CHECK(v < g.num_vertices());
    CHECK(seen.insert({u, v}).second);
  }
  // degrees consistent with the edge set
  std::vector<int> degree(g.num_vertices(), 0);
  for (const auto& [u, v] : g.edges()) {
    ++degree[u];
    ++degree[v];
  }
  for (int v = 0; v < g.num_vertices(); ++v) CHECK(degree[v] == g.degree(v));
}

}  // namespace

TEST_CASE("from_edges validates and canonicalizes") {
  auto g = Graph::from_edges(4, {{2, 1}, {0, 1}, {3, 2}});
  CHECK(g.num_vertices() == 4);
  CHECK(g.num_edges() == 3);
  CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
  CHECK(g.neighbors(1) == std::vector<int>{0, 2});

  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(3, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(0, {}), std::invalid_argument);
}

TEST_CASE("path graph shapes") {
  auto g = build_path(500);
  CHECK(g.num_vertices() == 500);
  CHECK(g.num_edges() == 499);
  CHECK(g.is_connected());

  auto tiny = build_path(2);
  CHECK(tiny.edges() == std::vector<std::pair<int, int>>{{0, 1}});

  auto ten = build_path(10);
  CHECK(ten.degree(0) == 1);
  CHECK(ten.degree(9) == 1);
  for (int v = 1; v < 9; ++v) CHECK(ten.degree(v) == 2);

  CHECK_THROWS_AS(build_path(1), std::invalid_argument);
}

TEST_CASE("grid3d counts and index convention") {
  auto big = build_grid3d(100, 100, 9);
  CHECK(big.num_vertices() == 90000);
  CHECK(big.num_edges() == 3 * 90000 - 100 * 100 - 100 * 9 - 100 * 9);

  auto point = build_grid3d(1, 1, 1);
  CHECK(point.num_vertices() == 1);
  CHECK(point.num_edges() == 0);

  auto cube = build_grid3d(2, 2, 2);
  CHECK(cube.num_vertices() == 8);
  CHECK(cube.num_edges() == 12);
  check_simple(cube);

  // edge-count formula over all small shapes
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b)
      for (int c = 1; c <= 4; ++c) {
        auto g = build_grid3d(a, b, c);
        CHECK(g.num_vertices() == a * b * c);
        CHECK(g.num_edges() == 3 * a * b * c - a * b - b * c - a * c);
        CHECK(g.is_connected());
      }

  CHECK_THROWS_AS(build_grid3d(0, 2, 2), std::invalid_argument);

  // column fastest, then row, then frame
  CHECK(grid3d_vertex(4, 3, 0, 0, 0) == 0);
  CHECK(grid3d_vertex(4, 3, 1, 0, 0) == 1);
  CHECK(grid3d_vertex(4, 3, 0, 1, 0) == 4);
  CHECK(grid3d_vertex(4, 3, 0, 0, 1) == 12);
  auto g = build_grid3d(4, 3, 2);
  auto& nb = g.neighbors(grid3d_vertex(4, 3, 1, 1, 0));
  CHECK(std::count(nb.begin(), nb.end(), grid3d_vertex(4, 3, 2, 1, 0)) == 1);
  CHECK(std::count(nb.begin(), nb.end(), grid3d_vertex(4, 3, 1, 2, 0)) == 1);
  CHECK(std::count(nb.begin(), nb.end(), grid3d_vertex(4, 3, 1, 1, 1)) == 1);
}

TEST_CASE("watts-strogatz construction") {
  std::mt19937_64 rng(7);
  auto ring = build_watts_strogatz(12, 0.0, rng);
  CHECK(ring.num_vertices() == 12);
  CHECK(ring.num_edges() == 12);
  for (int v = 0; v < 12; ++v) CHECK(ring.degree(v) == 2);
  CHECK(ring.is_connected());

  std::mt19937_64 rng2(42);
  auto ws = build_watts_strogatz(1000, 0.25, rng2);
  CHECK(ws.num_vertices() >= 500);  // the surviving component keeps a majority
  CHECK(ws.num_vertices() <= 1000);
  CHECK(ws.is_connected());
  check_simple(ws);

  std::mt19937_64 rng3(3);
  auto wild = build_watts_strogatz(10, 1.0, rng3);
  CHECK(wild.num_vertices() <= 10);
  CHECK(wild.is_connected());
  check_simple(wild);

  std::mt19937_64 a(5), b(5);
  auto g1 = build_watts_strogatz(200, 0.3, a);
  auto g2 = build_watts_strogatz(200, 0.3, b);
  CHECK(g1.edges() == g2.edges());

  std::mt19937_64 rng4(0);
  CHECK_THROWS_AS(build_watts_strogatz(2, 0.5, rng4), std::invalid_argument);
}

TEST_CASE("knn graph") {
  Eigen::MatrixXd line(3, 1);
  line << 0.0, 1.0, 2.0;
  auto path3 = build_knn_graph(line, 1);
  CHECK(path3.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});

  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(9, 4);
  auto complete = build_knn_graph(pts, 8);
  CHECK(complete.num_edges() == 9 * 8 / 2);

  // exact ties break toward the lower index
  Eigen::MatrixXd square(4, 2);
  square << 0, 0, 1, 0, 0, 1, 1, 1;
  auto tied = build_knn_graph(square, 1);
  CHECK(tied.edges() == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}});

  CHECK_THROWS_AS(build_knn_graph(line, 3), std::invalid_argument);
  Eigen::MatrixXd bad(2, 1);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_knn_graph(bad, 1), std::invalid_argument);
}

TEST_CASE("laplacian entries and row sums") {
  auto g = build_path(3);
  Eigen::MatrixXd L = Eigen::MatrixXd(laplacian(g));
  Eigen::MatrixXd expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((L - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(L.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);

  auto point = Graph::from_edges(1, {});
  Eigen::SparseMatrix<double> Lp = laplacian(point);
  CHECK(Lp.rows() == 1);
  CHECK(Eigen::MatrixXd(Lp).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(11);
  auto ws = build_watts_strogatz(60, 0.2, rng);
  Eigen::MatrixXd Lw = Eigen::MatrixXd(laplacian(ws));
  CHECK(Lw.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lw);
  CHECK(std::abs(es.eigenvalues()[0]) < 1e-10);
  CHECK(es.eigenvalues()[1] > 1e-8);  // connected: simple zero eigenvalue
}

TEST_CASE("largest connected component") {
  auto connected = build_path(5);
  auto same = largest_connected_component(connected);
  CHECK(same.graph.num_vertices() == 5);
  CHECK(same.original_vertex == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(same.graph.edges() == connected.edges());

  //  big component {1,3,5,6,7}, small {0,2,4}
  auto g = Graph::from_edges(8, {{1, 3}, {3, 5}, {5, 6}, {6, 7}, {0, 2}, {2, 4}});
  auto lcc = largest_connected_component(g);
  CHECK(lcc.graph.num_vertices() == 5);
  CHECK(lcc.original_vertex == std::vector<int>{1, 3, 5, 6, 7});
  CHECK(lcc.graph.edges() ==
        std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});

  // tie: keep the component holding the smallest original index
  auto tie = Graph::from_edges(4, {{2, 3}, {0, 1}});
  auto kept = largest_connected_component(tie);
  CHECK(kept.original_vertex == std::vector<int>{0, 1});
}

TEST_CASE("edge list round trip and parse errors") {
  std::mt19937_64 rng(9);
  auto g = build_watts_strogatz(40, 0.3, rng);
  std::stringstream buf;
  write_edge_list(g, buf);
  auto back = read_edge_list(buf);
  CHECK(back.num_vertices() == g.num_vertices());
  CHECK(back.edges() == g.edges());

  {
    std::stringstream in("1 2\n2 3\n");
    auto p = read_edge_list(in);
    CHECK(p.num_vertices() == 3);
    CHECK(p.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  }
  {
    std::stringstream in("1 2 3\n");
    CHECK_THROWS_AS(read_edge_list(in), std::invalid_argument);
  }
  {
    std::stringstream in("0 2\n");
    CHECK_THROWS_AS(read_edge_list(in), std::invalid_argument);
  }
  {
    std::stringstream in("2 2\n");
    CHECK_THROWS_AS(read_edge_list(in), std::invalid_argument);
  }
  {
    std::stringstream in("1 x\n");
    CHECK_THROWS_AS(read_edge_list(in), std::invalid_argument);
  }
}
