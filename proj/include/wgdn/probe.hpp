#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/linalg.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/random.hpp"

namespace wgdn {

struct ProbeOptions {
  double train_fraction = 0.1;
  double val_fraction = 0.1;
  std::size_t epochs = 300;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double accuracy = 0.0;      // test accuracy of the best-validation model
  double val_accuracy = 0.0;  // best validation accuracy
  std::size_t best_epoch = 0;
  std::vector<std::size_t> class_correct;  // test set, per class
  std::vector<std::size_t> class_total;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
  double val_fraction = 0.0;
  double test_fraction = 0.0;
};

namespace detail {

struct SoftmaxModel {
  Matrix weights;             // D × C
  std::vector<double> bias;  // C

  std::size_t predict(std::span<const double> x) const {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < bias.size(); ++c) {
      double s = bias[c];
      for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * weights(j, c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  }
};

inline double accuracy_on(const SoftmaxModel& model, const Matrix& x, std::span<const int> labels,
                          std::span<const std::size_t> idx) {
  if (idx.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i : idx)
    if (model.predict(x.row(i)) == static_cast<std::size_t>(labels[i])) ++hit;
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

inline double cross_entropy_on(const SoftmaxModel& model, const Matrix& x, std::span<const int> labels,
                               std::span<const std::size_t> idx) {
  const std::size_t classes = model.bias.size();
  std::vector<double> score(classes);
  double total = 0.0;
  for (std::size_t i : idx) {
    auto row = x.row(i);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) {
      double s = model.bias[c];
      for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * model.weights(j, c);
      score[c] = s;
      peak = std::max(peak, s);
    }
    double z = 0.0;
    for (double s : score) z += std::exp(s - peak);
    total += peak + std::log(z) - score[static_cast<std::size_t>(labels[i])];
  }
  return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace detail

/// Linear evaluation probe: multinomial logistic regression trained with
/// full-batch Adam on a random train/val/test split of the nodes. The weights
/// with the best validation accuracy (lower validation cross-entropy on ties)
/// are scored on test.
inline ProbeResult logistic_probe(const Matrix& embeddings, std::span<const int> labels, const ProbeOptions& opt = {}) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (labels.size() != n) throw ShapeError("logistic_probe: label count does not match embeddings");
  if (n == 0 || d == 0) throw InputError("logistic_probe: empty embeddings");
  for (int y : labels)
    if (y < 0) throw InputError("logistic_probe: labels must be non-negative");
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InputError("logistic_probe: labels must cover at least two classes");
  if (!(opt.train_fraction > 0.0 && opt.val_fraction > 0.0 && opt.train_fraction + opt.val_fraction < 1.0))
    throw InputError("logistic_probe: invalid split fractions");

  const std::size_t classes = static_cast<std::size_t>(*distinct.rbegin()) + 1;
  const auto count_for = [n](double f) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
  };
  const std::size_t n_train = count_for(opt.train_fraction);
  const std::size_t n_val = count_for(opt.val_fraction);
  if (n_train + n_val >= n) throw InputError("logistic_probe: too few nodes for the requested split");

  SeededRng rng(derive_seed(opt.seed, "probe"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  const std::span<const std::size_t> all(order);
  const auto train_idx = all.subspan(0, n_train);
  const auto val_idx = all.subspan(n_train, n_val);
  const auto test_idx = all.subspan(n_train + n_val);

  detail::SoftmaxModel model{glorot_init(rng, d, classes), std::vector<double>(classes, 0.0)};
  Matrix mw(d, classes), vw(d, classes);
  std::vector<double> mb(classes, 0.0), vb(classes, 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  detail::SoftmaxModel best = model;
  double best_val = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<double> prob(classes);
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    Matrix gw(d, classes);
    std::vector<double> gb(classes, 0.0);
    for (std::size_t i : train_idx) {
      auto x = embeddings.row(i);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) {
        double s = model.bias[c];
        for (std::size_t j = 0; j < d; ++j) s += x[j] * model.weights(j, c);
        prob[c] = s;
        peak = std::max(peak, s);
      }
      double z = 0.0;
      for (double& p : prob) z += (p = std::exp(p - peak));
      for (std::size_t c = 0; c < classes; ++c) {
        const double delta = prob[c] / z - (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0);
        gb[c] += delta;
        for (std::size_t j = 0; j < d; ++j) gw(j, c) += delta * x[j];
      }
    }
    const double inv = 1.0 / static_cast<double>(train_idx.size());
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(epoch));
    auto step = [&](double& w, double& m, double& v, double g) {
      g *= inv;
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      w -= opt.lr * (m / c1) / (std::sqrt(v / c2) + eps);
    };
    for (std::size_t k = 0; k < gw.size(); ++k) step(model.weights.data()[k], mw.data()[k], vw.data()[k], gw.data()[k]);
    for (std::size_t c = 0; c < classes; ++c) step(model.bias[c], mb[c], vb[c], gb[c]);

    const double val = detail::accuracy_on(model, embeddings, labels, val_idx);
    const double val_loss = detail::cross_entropy_on(model, embeddings, labels, val_idx);
    if (val > best_val || (val == best_val && val_loss < best_val_loss)) {
      best_val = val;
      best_val_loss = val_loss;
      best = model;
      best_epoch = epoch;
    }
  }
  if (opt.epochs == 0) best_val = detail::accuracy_on(model, embeddings, labels, val_idx);

  ProbeResult r;
  r.seed = opt.seed;
  r.val_accuracy = best_val;
  r.best_epoch = best_epoch;
  r.class_correct.assign(classes, 0);
  r.class_total.assign(classes, 0);
  std::size_t hit = 0;
  for (std::size_t i : test_idx) {
    const auto y = static_cast<std::size_t>(labels[i]);
    ++r.class_total[y];
    if (best.predict(embeddings.row(i)) == y) {
      ++r.class_correct[y];
      ++hit;
    }
  }
  r.accuracy = static_cast<double>(hit) / static_cast<double>(test_idx.size());
  r.train_fraction = static_cast<double>(n_train) / static_cast<double>(n);
  r.val_fraction = static_cast<double>(n_val) / static_cast<double>(n);
  r.test_fraction = static_cast<double>(test_idx.size()) / static_cast<double>(n);
  return r;
}

}  // namespace wgdn
