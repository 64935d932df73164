#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/random.hpp"

namespace wgdn {

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]

  std::size_t size() const { return eigenvalues.size(); }
};

inline bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

namespace detail {

inline double max_off_diagonal(const Matrix& a) {
  double off = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) off = std::max(off, std::abs(a(i, j)));
  return off;
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Sweeps over all (p, q) pairs in row order, annihilating a_pq with a plane
/// rotation, until the largest off-diagonal magnitude is at most `tol`.
/// Eigenpairs are returned sorted by ascending eigenvalue.
inline EigenDecomposition eigh_symmetric(const Matrix& m, double tol = 1e-11,
                                         std::size_t max_sweeps = 64) {
  if (m.rows() != m.cols()) throw InputError("eigh_symmetric: matrix is not square");
  if (!is_symmetric(m, 1e-10)) throw InputError("eigh_symmetric: matrix is not symmetric");

  const std::size_t n = m.rows();
  Matrix a = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  double off = detail::max_off_diagonal(a);
  std::size_t sweep = 0;
  while (off > tol) {
    if (sweep == max_sweeps) {
      throw NumericalError("eigh_symmetric: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps, max off-diagonal " + std::to_string(off));
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = detail::max_off_diagonal(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition ed;
  ed.eigenvalues.resize(n);
  ed.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    ed.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) ed.eigenvectors(i, k) = v(i, order[k]);
  }
  return ed;
}

/// Solves a·x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(const Matrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("solve_linear: matrix is not square");
  if (b.size() != n) throw ShapeError("solve_linear: right-hand side length mismatch");

  Matrix m = a;
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (std::abs(m(pivot, col)) < 1e-13) {
      throw SingularSystemError("solve_linear: pivot " + std::to_string(m(pivot, col)) +
                                " in column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(pivot, j));
      std::swap(x[col], x[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
      x[r] -= f * x[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

inline std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ShapeError("matvec: length mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

// Uniform on [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_init(SeededRng& rng, std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw InputError("glorot_init: dimensions must be positive");
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (double& v : w.data()) v = rng.uniform(-s, s);
  return w;
}

}  // namespace wgdn
