#include <gtest/gtest.h>

#include <numeric>

#include "wgdn/datasets.hpp"
#include "wgdn/probe.hpp"

using namespace wgdn;

namespace {

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs separable_blobs(std::size_t per_class, std::uint64_t seed) {
  SeededRng rng(seed);
  Blobs b{Matrix(2 * per_class, 2), {}};
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    b.x(i, 0) = (c == 0 ? -3.0 : 3.0) + 0.3 * rng.normal();
    b.x(i, 1) = 0.3 * rng.normal();
    b.y.push_back(c);
  }
  return b;
}

}  // namespace

TEST(Probe, SeparableBlobsArePerfect) {
  const auto b = separable_blobs(100, 1);
  const auto r = logistic_probe(b.x, b.y, ProbeOptions{.seed = 3});
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_NEAR(r.train_fraction, 0.1, 1e-12);
  EXPECT_NEAR(r.val_fraction, 0.1, 1e-12);
  EXPECT_NEAR(r.test_fraction, 0.8, 1e-12);
}

TEST(Probe, PermutationNullIsChance) {
  SeededRng rng(5);
  Matrix x(400, 8);
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> y(400);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  shuffle(std::span<int>(y), rng);
  double mean = 0;
  for (std::uint64_t s = 0; s < 5; ++s) mean += logistic_probe(x, y, ProbeOptions{.seed = s}).accuracy;
  EXPECT_NEAR(mean / 5, 0.5, 0.1);
}

TEST(Probe, ConstantEmbeddingsGiveMajorityFraction) {
  const std::size_t n = 300;
  Matrix x(n, 4, 1.0);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % 10 < 7 ? 0 : 1;
  const auto r = logistic_probe(x, y, ProbeOptions{.seed = 2});
  const double majority = static_cast<double>(r.class_total[0]) /
                          static_cast<double>(std::accumulate(r.class_total.begin(), r.class_total.end(), 0u));
  EXPECT_NEAR(r.accuracy, majority, 1e-12);
}

TEST(Probe, DeterministicPerSeed) {
  const auto data = make_karate_dataset(4, 0.5, 3);
  const auto a = logistic_probe(data.features, data.labels, ProbeOptions{.seed = 9});
  const auto b = logistic_probe(data.features, data.labels, ProbeOptions{.seed = 9});
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
  EXPECT_EQ(a.class_correct, b.class_correct);
}

TEST(Probe, RejectsBadInput) {
  const auto b = separable_blobs(10, 1);
  EXPECT_THROW(logistic_probe(b.x, std::vector<int>(20, 0)), InputError);
  EXPECT_THROW(logistic_probe(b.x, std::vector<int>(19, 0)), ShapeError);
  std::vector<int> neg = b.y;
  neg[0] = -1;
  EXPECT_THROW(logistic_probe(b.x, neg), InputError);
  EXPECT_THROW(logistic_probe(b.x, b.y, ProbeOptions{.train_fraction = 0.6, .val_fraction = 0.5}), InputError);
  EXPECT_THROW(logistic_probe(b.x, b.y, ProbeOptions{.train_fraction = 0.0}), InputError);
}

TEST(Probe, ThreeClassesWithPerClassCounts) {
  SeededRng rng(4);
  Matrix x(300, 3);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < 300; ++i) {
    y[i] = static_cast<int>(i % 3);
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = (static_cast<int>(j) == y[i] ? 4.0 : 0.0) + 0.5 * rng.normal();
  }
  const auto r = logistic_probe(x, y, ProbeOptions{.seed = 1});
  EXPECT_EQ(r.class_total.size(), 3u);
  EXPECT_GE(r.accuracy, 0.95);
  std::size_t total = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_LE(r.class_correct[c], r.class_total[c]);
    total += r.class_total[c];
  }
  EXPECT_EQ(total, 240u);
}

TEST(Datasets, FeaturesCarryClassSignal) {
  const std::vector<int> labels{0, 0, 1, 1};
  const Matrix noise_only = class_conditional_features(labels, 5, 0.0, 1);
  EXPECT_EQ(noise_only.rows(), 4u);
  const auto data = make_sbm_dataset(SyntheticSpec{}, 0);
  EXPECT_EQ(data.features.rows(), 200u);
  EXPECT_EQ(data.features.cols(), 16u);
  EXPECT_EQ(data.labels.size(), 200u);
  const auto again = make_sbm_dataset(SyntheticSpec{}, 0);
  EXPECT_EQ(data.features, again.features);
  EXPECT_EQ(data.graph.edge_list(), again.graph.edge_list());
}
