#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/random.hpp"

namespace wgdn {

using NodeId = std::uint32_t;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

// Undirected, unweighted graph in compressed row form. Every edge is stored in
// both directions; rows are sorted, without self-loops or duplicates.
class Graph {
 public:
  Graph() : row_offsets_{0} {}

  std::size_t num_nodes() const { return row_offsets_.size() - 1; }
  // Undirected edge count |E|.
  std::size_t num_edges() const { return col_indices_.size() / 2; }
  std::size_t num_stored() const { return col_indices_.size(); }

  std::size_t degree(std::size_t i) const { return row_offsets_[i + 1] - row_offsets_[i]; }

  std::span<const NodeId> neighbors(std::size_t i) const {
    return {col_indices_.data() + row_offsets_[i], degree(i)};
  }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const NodeId> col_indices() const { return col_indices_; }

  bool has_edge(std::size_t i, std::size_t j) const {
    auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), static_cast<NodeId>(j));
  }

  // Each undirected edge once, as (u, v) with u < v, in row order.
  EdgeList edge_list() const {
    EdgeList out;
    out.reserve(num_edges());
    for (std::size_t i = 0; i < num_nodes(); ++i)
      for (NodeId j : neighbors(i))
        if (i < j) out.emplace_back(static_cast<NodeId>(i), j);
    return out;
  }

  friend Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges, std::size_t num_nodes);

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<NodeId> col_indices_;
};

/// Builds a Graph from an arbitrary edge list: drops self-loops, symmetrizes,
/// deduplicates and sorts each row.
inline Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges, std::size_t num_nodes) {
  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw InputError("build_graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  Graph g;
  g.row_offsets_.assign(num_nodes + 1, 0);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.row_offsets_[i + 1] = g.row_offsets_[i] + row.size();
  }
  g.col_indices_.reserve(g.row_offsets_.back());
  for (const auto& row : adj) g.col_indices_.insert(g.col_indices_.end(), row.begin(), row.end());
  return g;
}

inline Graph build_graph(const EdgeList& edges, std::size_t num_nodes) {
  return build_graph(std::span<const std::pair<NodeId, NodeId>>(edges), num_nodes);
}

// Square sparse operator sharing the compressed row layout of a Graph, plus values.
struct SparseOperator {
  std::size_t n = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;
  std::vector<double> values;

  std::size_t rows() const { return n; }
  std::size_t cols() const { return n; }
  std::size_t nnz() const { return values.size(); }

  double at(std::size_t i, std::size_t j) const {
    auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    auto it = std::lower_bound(first, last, static_cast<NodeId>(j));
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
  }

  Matrix to_dense() const {
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) d(i, col_indices[k]) = values[k];
    return d;
  }

  static SparseOperator identity(std::size_t n) {
    SparseOperator op;
    op.n = n;
    op.row_offsets.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) op.row_offsets[i] = i;
    op.col_indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) op.col_indices[i] = static_cast<NodeId>(i);
    op.values.assign(n, 1.0);
    return op;
  }
};

/// L = I − D^{-1/2} A D^{-1/2}. Isolated nodes get an all-zero row and column,
/// so they sit at eigenvalue 0.
inline SparseOperator normalized_laplacian(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (g.degree(i) > 0) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));

  SparseOperator op;
  op.n = n;
  op.row_offsets.assign(n + 1, 0);
  op.col_indices.reserve(g.num_stored() + n);
  op.values.reserve(g.num_stored() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diag = g.degree(i) > 0 ? 1.0 : 0.0;
    bool placed_diag = false;
    for (NodeId j : g.neighbors(i)) {
      if (!placed_diag && j > i) {
        op.col_indices.push_back(static_cast<NodeId>(i));
        op.values.push_back(diag);
        placed_diag = true;
      }
      op.col_indices.push_back(j);
      op.values.push_back(-inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    if (!placed_diag) {
      op.col_indices.push_back(static_cast<NodeId>(i));
      op.values.push_back(diag);
    }
    op.row_offsets[i + 1] = op.col_indices.size();
  }
  return op;
}

/// D^{-1} A; rows of isolated nodes are zero.
inline SparseOperator random_walk_matrix(const Graph& g) {
  SparseOperator op;
  op.n = g.num_nodes();
  op.row_offsets.assign(g.row_offsets().begin(), g.row_offsets().end());
  op.col_indices.assign(g.col_indices().begin(), g.col_indices().end());
  op.values.resize(op.col_indices.size());
  for (std::size_t i = 0; i < op.n; ++i) {
    const double w = 1.0 / static_cast<double>(std::max<std::size_t>(g.degree(i), 1));
    for (std::size_t k = op.row_offsets[i]; k < op.row_offsets[i + 1]; ++k) op.values[k] = w;
  }
  return op;
}

// out = op · x. `out` is resized as needed.
inline void spmm_into(const SparseOperator& op, const Matrix& x, Matrix& out) {
  if (op.cols() != x.rows()) {
    throw ShapeError("spmm: operator " + std::to_string(op.n) + "x" + std::to_string(op.n) +
                     " times " + x.shape_string());
  }
  if (out.rows() != op.rows() || out.cols() != x.cols()) out = Matrix(op.rows(), x.cols());
  const std::size_t cols = x.cols();
  for (std::size_t i = 0; i < op.n; ++i) {
    auto orow = out.row(i);
    std::fill(orow.begin(), orow.end(), 0.0);
    for (std::size_t k = op.row_offsets[i]; k < op.row_offsets[i + 1]; ++k) {
      const double v = op.values[k];
      auto xrow = x.row(op.col_indices[k]);
      for (std::size_t c = 0; c < cols; ++c) orow[c] += v * xrow[c];
    }
  }
}

inline Matrix spmm(const SparseOperator& op, const Matrix& x) {
  Matrix out;
  spmm_into(op, x, out);
  return out;
}

struct LabeledGraph {
  Graph graph;
  std::vector<int> labels;
};

/// Stochastic block model. Every unordered pair (i, j), i < j, is visited once
/// in lexicographic order and gets an edge with probability p_in (same block)
/// or p_out (different blocks). Labels are block indices.
inline LabeledGraph generate_sbm(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                                 std::uint64_t seed) {
  if (block_sizes.empty()) throw InputError("generate_sbm: no blocks");
  for (std::size_t b : block_sizes)
    if (b == 0) throw InputError("generate_sbm: empty block");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw InputError("generate_sbm: probabilities must lie in [0, 1]");

  std::vector<int> labels;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) labels.insert(labels.end(), block_sizes[b], static_cast<int>(b));
  const std::size_t n = labels.size();

  SeededRng rng(seed);
  EdgeList edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? p_in : p_out;
      if (rng.uniform() < p) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  return {build_graph(edges, n), std::move(labels)};
}

inline LabeledGraph generate_sbm(std::initializer_list<std::size_t> block_sizes, double p_in, double p_out,
                                 std::uint64_t seed) {
  std::vector<std::size_t> sizes(block_sizes);
  return generate_sbm(std::span<const std::size_t>(sizes), p_in, p_out, seed);
}

/// Zachary's karate club: 34 members, 78 friendships, labels are the two
/// factions after the split (0 = instructor, 1 = administrator).
inline LabeledGraph karate_graph() {
  static constexpr std::array<std::pair<NodeId, NodeId>, 78> kEdges{{
      {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},  {0, 11},
      {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},
      {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},
      {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
      {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33},
      {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29},
      {23, 32}, {23, 33}, {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
      {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33},
  }};
  static constexpr std::array<int, 34> kFaction{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0,
                                                0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  EdgeList edges(kEdges.begin(), kEdges.end());
  return {build_graph(edges, 34), std::vector<int>(kFaction.begin(), kFaction.end())};
}

}  // namespace wgdn
