#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wgdn/graph.hpp"
#include "wgdn/linalg.hpp"

using namespace wgdn;

namespace {

std::vector<std::size_t> row_lengths(const Graph& g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) out.push_back(g.degree(i));
  return out;
}

Graph path3() { return build_graph(EdgeList{{0, 1}, {1, 2}}, 3); }

}  // namespace

TEST(BuildGraph, SingleEdge) {
  const Graph g = build_graph(EdgeList{{0, 1}}, 2);
  EXPECT_EQ(row_lengths(g), (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(g.neighbors(0)[0], 1u);
  EXPECT_EQ(g.neighbors(1)[0], 0u);
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(BuildGraph, DuplicatesAndSelfLoopsRemoved) {
  const Graph g = build_graph(EdgeList{{0, 1}, {1, 0}, {0, 0}}, 2);
  const Graph ref = build_graph(EdgeList{{0, 1}}, 2);
  EXPECT_EQ(row_lengths(g), row_lengths(ref));
  EXPECT_EQ(std::vector<NodeId>(g.col_indices().begin(), g.col_indices().end()),
            std::vector<NodeId>(ref.col_indices().begin(), ref.col_indices().end()));
}

TEST(BuildGraph, EmptyEdgeSet) {
  const Graph g = build_graph(EdgeList{}, 3);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(row_lengths(g), (std::vector<std::size_t>{0, 0, 0}));
}

TEST(BuildGraph, OutOfRangeIdRejected) {
  EXPECT_THROW(build_graph(EdgeList{{0, 3}}, 3), InputError);
}

TEST(BuildGraph, NeighborsSortedAndSymmetric) {
  const Graph g = build_graph(EdgeList{{3, 0}, {2, 0}, {1, 0}, {2, 3}}, 4);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
    for (NodeId j : nb) EXPECT_TRUE(g.has_edge(j, i));
  }
  EXPECT_EQ(g.edge_list().size(), g.num_edges());
}

TEST(NormalizedLaplacian, TwoNodes) {
  const auto l = normalized_laplacian(build_graph(EdgeList{{0, 1}}, 2)).to_dense();
  EXPECT_EQ(l, Matrix::from_rows({{1, -1}, {-1, 1}}));
  const auto ed = eigh_symmetric(l);
  EXPECT_NEAR(ed.eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(ed.eigenvalues[1], 2.0, 1e-12);
}

TEST(NormalizedLaplacian, PathSpectrumMatchesCharacteristicPolynomial) {
  // L(P3) = [[1,-s,0],[-s,1,-s],[0,-s,1]] with s = 1/√2; det(L − λI) = (1−λ)((1−λ)² − 1).
  const auto l = normalized_laplacian(path3()).to_dense();
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(l(0, 1), -s, 1e-15);
  for (double lam : eigh_symmetric(l).eigenvalues) {
    const double det = (1 - lam) * ((1 - lam) * (1 - lam) - 2 * s * s);
    EXPECT_NEAR(det, 0.0, 1e-10);
  }
  const auto ev = eigh_symmetric(l).eigenvalues;
  EXPECT_NEAR(ev[0], 0.0, 1e-10);
  EXPECT_NEAR(ev[1], 1.0, 1e-10);
  EXPECT_NEAR(ev[2], 2.0, 1e-10);
}

TEST(NormalizedLaplacian, IsolatedNodeRowIsZero) {
  const auto l = normalized_laplacian(build_graph(EdgeList{{0, 1}}, 3));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(l.at(2, j), 0.0);
    EXPECT_EQ(l.at(j, 2), 0.0);
  }
  const auto ev = eigh_symmetric(l.to_dense()).eigenvalues;
  EXPECT_EQ(std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v) < 1e-12; }), 2);
}

TEST(NormalizedLaplacian, SpectrumInZeroTwoOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto lg = generate_sbm({15, 15}, 0.3, 0.05, seed);
    const auto l = normalized_laplacian(lg.graph).to_dense();
    EXPECT_TRUE(is_symmetric(l, 0.0));
    for (double v : eigh_symmetric(l).eigenvalues) {
      EXPECT_GE(v, -1e-10);
      EXPECT_LE(v, 2.0 + 1e-10);
    }
  }
}

TEST(RandomWalk, KnownRows) {
  EXPECT_EQ(random_walk_matrix(build_graph(EdgeList{{0, 1}}, 2)).to_dense(), Matrix::from_rows({{0, 1}, {1, 0}}));
  const auto tri = random_walk_matrix(build_graph(EdgeList{{0, 1}, {1, 2}, {0, 2}}, 3)).to_dense();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(tri(i, j), i == j ? 0.0 : 0.5);
  const auto star = random_walk_matrix(build_graph(EdgeList{{0, 1}, {0, 2}, {0, 3}}, 4));
  for (std::size_t j = 1; j < 4; ++j) EXPECT_DOUBLE_EQ(star.at(0, j), 1.0 / 3.0);
}

TEST(RandomWalk, RowsSumToOneForNonIsolatedNodes) {
  const auto lg = generate_sbm({20, 20}, 0.2, 0.05, 3);
  const auto rw = random_walk_matrix(lg.graph);
  for (std::size_t i = 0; i < rw.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = rw.row_offsets[i]; k < rw.row_offsets[i + 1]; ++k) s += rw.values[k];
    EXPECT_NEAR(s, lg.graph.degree(i) > 0 ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Spmm, LaplacianOfTwoNodes) {
  const auto l = normalized_laplacian(build_graph(EdgeList{{0, 1}}, 2));
  EXPECT_EQ(spmm(l, Matrix::from_rows({{1}, {1}})), Matrix::from_rows({{0}, {0}}));
  EXPECT_EQ(spmm(l, Matrix::from_rows({{1}, {0}})), Matrix::from_rows({{1}, {-1}}));
}

TEST(Spmm, IdentityOperator) {
  const auto x = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(spmm(SparseOperator::identity(3), x), x);
}

TEST(Spmm, MatchesDenseProduct) {
  const auto lg = generate_sbm({10, 12}, 0.4, 0.1, 11);
  const auto l = normalized_laplacian(lg.graph);
  SeededRng rng(5);
  Matrix x(l.rows(), 3);
  for (double& v : x.data()) v = rng.normal();
  EXPECT_LE(max_abs_diff(spmm(l, x), matmul(l.to_dense(), x)), 1e-13);
}

TEST(Spmm, ShapeMismatchThrows) {
  const auto l = normalized_laplacian(build_graph(EdgeList{{0, 1}}, 2));
  EXPECT_THROW(spmm(l, Matrix(3, 1)), ShapeError);
}

TEST(Sbm, DeterministicLimits) {
  const auto two = generate_sbm({3, 3}, 1.0, 0.0, 1);
  EXPECT_EQ(two.graph.num_edges(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(two.graph.degree(i), 2u);
    for (NodeId j : two.graph.neighbors(i)) EXPECT_EQ(two.labels[i], two.labels[j]);
  }
  EXPECT_EQ(generate_sbm({4}, 0.0, 0.0, 1).graph.num_edges(), 0u);
}

TEST(Sbm, IntraEdgeCountWithinBinomialBounds) {
  const auto lg = generate_sbm({50, 50}, 0.2, 0.02, 7);
  std::size_t intra = 0, inter = 0;
  for (const auto& [u, v] : lg.graph.edge_list()) (lg.labels[u] == lg.labels[v] ? intra : inter)++;
  const double pairs_in = 2.0 * 50 * 49 / 2;
  const double mean_in = 0.2 * pairs_in, sd_in = std::sqrt(pairs_in * 0.2 * 0.8);
  EXPECT_NEAR(static_cast<double>(intra), mean_in, 4 * sd_in);
  const double pairs_out = 50.0 * 50.0;
  EXPECT_NEAR(static_cast<double>(inter), 0.02 * pairs_out, 4 * std::sqrt(pairs_out * 0.02 * 0.98));
}

TEST(Sbm, SameSeedSameGraph) {
  const auto a = generate_sbm({20, 20}, 0.3, 0.05, 99);
  const auto b = generate_sbm({20, 20}, 0.3, 0.05, 99);
  EXPECT_EQ(a.graph.edge_list(), b.graph.edge_list());
  EXPECT_NE(a.graph.edge_list(), generate_sbm({20, 20}, 0.3, 0.05, 100).graph.edge_list());
}

TEST(Karate, EmbeddedConstants) {
  const auto k = karate_graph();
  EXPECT_EQ(k.graph.num_nodes(), 34u);
  EXPECT_EQ(k.graph.num_edges(), 78u);
  EXPECT_EQ(k.graph.degree(0), 16u);
  EXPECT_EQ(k.graph.degree(33), 17u);
  EXPECT_EQ(k.labels.size(), 34u);
  for (std::size_t i = 0; i < 34; ++i)
    for (NodeId j : k.graph.neighbors(i)) EXPECT_TRUE(k.graph.has_edge(j, i));
}
