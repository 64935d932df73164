#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/graph.hpp"
#include "wgdn/linalg.hpp"
#include "wgdn/matrix.hpp"

namespace wgdn {

inline constexpr std::size_t kMaxRemezOrder = 16;

// Reference set for the one-shot fit.
//   roots:   zeros of T_n (first kind), t_j = mid + half·cos((2j+1)π/(2n))
//   extrema: extreme points of T_{n-1} including both endpoints,
//            t_j = mid + half·cos(jπ/(n−1))
enum class NodeKind { roots, extrema };

inline std::string_view to_string(NodeKind k) { return k == NodeKind::roots ? "roots" : "extrema"; }

inline NodeKind parse_node_kind(std::string_view s) {
  if (s == "roots") return NodeKind::roots;
  if (s == "extrema") return NodeKind::extrema;
  throw InputError("unknown node kind '" + std::string(s) + "' (expected roots or extrema)");
}

// Chebyshev nodes of the first kind on [a, b], sorted ascending.
inline std::vector<double> chebyshev_nodes(std::size_t n, double a, double b) {
  if (n == 0) throw InputError("chebyshev_nodes: n must be positive");
  if (!(a < b)) throw InputError("chebyshev_nodes: empty interval");
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = mid + half * std::cos(static_cast<double>(2 * j + 1) * std::numbers::pi / static_cast<double>(2 * n));
  std::sort(t.begin(), t.end());
  return t;
}

// Chebyshev extreme points on [a, b], sorted ascending. n = 1 gives the midpoint.
inline std::vector<double> chebyshev_extrema(std::size_t n, double a, double b) {
  if (n == 0) throw InputError("chebyshev_extrema: n must be positive");
  if (!(a < b)) throw InputError("chebyshev_extrema: empty interval");
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  if (n == 1) return {mid};
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = mid + half * std::cos(static_cast<double>(j) * std::numbers::pi / static_cast<double>(n - 1));
  std::sort(t.begin(), t.end());
  t.front() = a;
  t.back() = b;
  return t;
}

inline std::vector<double> reference_nodes(NodeKind kind, std::size_t n, double a, double b) {
  return kind == NodeKind::roots ? chebyshev_nodes(n, a, b) : chebyshev_extrema(n, a, b);
}

struct RemezPolynomial {
  std::vector<double> coeffs;  // c_0 .. c_K, monomial basis
  double leveled_error = 0.0;
  double a = 0.0;
  double b = 2.0;
  std::vector<double> nodes;  // the K+2 reference points used for the fit

  std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }

  static RemezPolynomial from_coeffs(std::vector<double> c, double a = 0.0, double b = 2.0) {
    return RemezPolynomial{std::move(c), 0.0, a, b, {}};
  }
};

// Horner evaluation of Σ c_k t^k.
inline double poly_eval(const RemezPolynomial& p, double t) {
  double acc = 0.0;
  for (std::size_t k = p.coeffs.size(); k-- > 0;) acc = acc * t + p.coeffs[k];
  return acc;
}

/// One-shot Remez fit: solves the (K+2)×(K+2) system
///     f(t_j) = Σ_k c_k t_j^k + (−1)^j e,   j = 0..K+1
/// on a Chebyshev reference set of [a, b].
inline RemezPolynomial remez_fit(const std::function<double(double)>& f, std::size_t degree,
                                 double a = 0.0, double b = 2.0, NodeKind kind = NodeKind::extrema) {
  if (degree > kMaxRemezOrder) {
    throw InputError("remez_fit: order " + std::to_string(degree) + " exceeds the cap of " +
                     std::to_string(kMaxRemezOrder));
  }
  const std::size_t n = degree + 2;
  const auto t = reference_nodes(kind, n, a, b);

  Matrix system(n, n);
  std::vector<double> rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    double power = 1.0;
    for (std::size_t k = 0; k <= degree; ++k) {
      system(j, k) = power;
      power *= t[j];
    }
    system(j, n - 1) = (j % 2 == 0) ? 1.0 : -1.0;
    rhs[j] = f(t[j]);
    if (!std::isfinite(rhs[j])) {
      throw InputError("remez_fit: target is not finite at t = " + std::to_string(t[j]));
    }
  }
  const auto sol = solve_linear(system, rhs);

  RemezPolynomial p;
  p.coeffs.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(degree + 1));
  p.leveled_error = sol.back();
  p.a = a;
  p.b = b;
  p.nodes = t;
  return p;
}

// max |f − p| over `points` uniformly spaced samples of [p.a, p.b].
inline double max_grid_error(const std::function<double(double)>& f, const RemezPolynomial& p,
                             std::size_t points = 1001) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? p.a : p.a + (p.b - p.a) * static_cast<double>(i) / static_cast<double>(points - 1);
    worst = std::max(worst, std::abs(f(t) - poly_eval(p, t)));
  }
  return worst;
}

/// Σ_k c_k L^k x via Horner's scheme: K sparse products, L^k never formed.
inline Matrix apply_matrix_polynomial(const SparseOperator& l, const RemezPolynomial& p, const Matrix& x) {
  if (l.cols() != x.rows()) throw ShapeError("apply_matrix_polynomial: operator/feature row mismatch");
  if (p.coeffs.empty()) return Matrix(x.rows(), x.cols());
  Matrix acc = p.coeffs.back() * x;
  Matrix tmp;
  for (std::size_t k = p.coeffs.size() - 1; k-- > 0;) {
    spmm_into(l, acc, tmp);
    std::swap(acc, tmp);
    axpy(p.coeffs[k], x, acc);
  }
  return acc;
}

}  // namespace wgdn
