#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "wgdn/graph.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/random.hpp"

namespace wgdn {

struct Dataset {
  Graph graph;
  Matrix features;
  std::vector<int> labels;  // empty when unknown
};

/// Node features X_i = signal · μ_{y_i} + ε_i with ε_i ~ N(0, I). Each class
/// mean μ_c has i.i.d. ±1 entries; signal = 0 gives pure noise.
inline Matrix class_conditional_features(std::span<const int> labels, std::size_t dim, double signal,
                                         std::uint64_t seed) {
  int classes = 0;
  for (int y : labels) classes = std::max(classes, y + 1);
  SeededRng rng(derive_seed(seed, "features"));
  Matrix means(static_cast<std::size_t>(classes), dim);
  for (double& v : means.data()) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
  Matrix x(labels.size(), dim);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      x(i, j) = signal * means(static_cast<std::size_t>(labels[i]), j) + rng.normal();
  return x;
}

struct SyntheticSpec {
  std::vector<std::size_t> block_sizes{100, 100};
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feature_dim = 16;
  double feature_signal = 0.5;
};

// SBM graph plus class-conditional features; the graph and the features use
// independent child seeds of `seed`.
inline Dataset make_sbm_dataset(const SyntheticSpec& s, std::uint64_t seed) {
  auto lg = generate_sbm(std::span<const std::size_t>(s.block_sizes), s.p_in, s.p_out, derive_seed(seed, "sbm"));
  Matrix x = class_conditional_features(lg.labels, s.feature_dim, s.feature_signal, seed);
  return {std::move(lg.graph), std::move(x), std::move(lg.labels)};
}

inline Dataset make_karate_dataset(std::size_t feature_dim, double feature_signal, std::uint64_t seed) {
  auto lg = karate_graph();
  Matrix x = class_conditional_features(lg.labels, feature_dim, feature_signal, seed);
  return {std::move(lg.graph), std::move(x), std::move(lg.labels)};
}

}  // namespace wgdn
