#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/graph.hpp"
#include "wgdn/linalg.hpp"
#include "wgdn/matrix.hpp"

namespace wgdn {

enum class KernelKind { gcn, heat, ppr };

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::gcn: return "gcn";
    case KernelKind::heat: return "heat";
    case KernelKind::ppr: return "ppr";
  }
  return "?";
}

inline KernelKind parse_kernel(std::string_view s) {
  if (s == "gcn") return KernelKind::gcn;
  if (s == "heat") return KernelKind::heat;
  if (s == "ppr") return KernelKind::ppr;
  throw InputError("unknown kernel '" + std::string(s) + "' (expected gcn, heat or ppr)");
}

// Convolution filter family g_c.
struct KernelSpec {
  KernelKind kind = KernelKind::heat;
  double t = 1.0;      // heat diffusion time
  double alpha = 0.2;  // ppr teleport probability

  void validate() const {
    if (!(t > 0.0)) throw InputError("kernel: diffusion time t must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("kernel: alpha must lie in (0, 1]");
  }
};

// g_c(λ): gcn 1−λ, heat e^{−tλ}, ppr α / (1 − (1−α)(1−λ)).
inline double eval_conv(const KernelSpec& k, double lam) {
  switch (k.kind) {
    case KernelKind::gcn: return 1.0 - lam;
    case KernelKind::heat: return std::exp(-k.t * lam);
    case KernelKind::ppr: {
      const double denom = 1.0 - (1.0 - k.alpha) * (1.0 - lam);
      assert(std::abs(denom) >= 1e-12);
      return k.alpha / denom;
    }
  }
  return 0.0;
}

inline constexpr double kDefaultInverseClamp = 1e-3;

// 1/g_c(λ). Only the gcn kernel needs the clamp: |g_c| is floored at `clamp`
// before inverting, keeping the sign (positive at the singular point).
inline double eval_inverse(const KernelSpec& k, double lam, double clamp = kDefaultInverseClamp) {
  switch (k.kind) {
    case KernelKind::gcn: {
      const double g = 1.0 - lam;
      if (std::abs(g) >= clamp) return 1.0 / g;
      return g < 0.0 ? -1.0 / clamp : 1.0 / clamp;
    }
    case KernelKind::heat: return std::exp(k.t * lam);
    case KernelKind::ppr: return (1.0 - (1.0 - k.alpha) * (1.0 - lam)) / k.alpha;
  }
  return 0.0;
}

// Modified graph Wiener filter data. sigma2 / (gamma * avg_energy) is the
// augmentation-to-energy ratio (AER).
struct WienerSpec {
  KernelSpec kernel;
  double sigma2 = 0.0;
  double avg_energy = 1.0;
  double gamma = 1.0;

  double aer() const {
    if (sigma2 == 0.0) return 0.0;
    const double energy = gamma * avg_energy;
    return energy > 0.0 ? sigma2 / energy : std::numeric_limits<double>::infinity();
  }
};

// Wiener response for a given convolution value and AER.
inline double wiener_response(double gc, double aer) {
  if (aer == 0.0) return gc == 0.0 ? 0.0 : 1.0 / gc;
  if (std::isinf(aer)) return 0.0;
  return gc / (gc * gc + aer);
}

// g_c(λ) / (g_c²(λ) + σ²/(γ·x̄*²))
inline double eval_wiener(const WienerSpec& w, double lam) {
  return wiener_response(eval_conv(w.kernel, lam), w.aer());
}

// Per-spectrum Wiener filter g_c / (g_c² + σ²/E[x*²_i]) with a caller-supplied energy.
inline double eval_wiener_spectral(const KernelSpec& k, double lam, double sigma2, double energy) {
  return eval_wiener(WienerSpec{k, sigma2, energy, 1.0}, lam);
}

/// Average spectral energy x̄*² = (‖H‖_F² + ‖H − (1/N)𝟙H‖_F²) / (N·D').
inline double estimate_avg_energy(const Matrix& h) {
  if (h.empty()) throw InputError("estimate_avg_energy: empty matrix");
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += h(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  double second = 0.0;
  double centered = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = h(i, j);
      second += v * v;
      centered += (v - mean[j]) * (v - mean[j]);
    }
  }
  return (second + centered) / static_cast<double>(n * d);
}

/// Augmentation variance from the neighbourhood: σ² = ‖H − D⁻¹A·H‖_F² / (N·D').
inline double estimate_sigma2(const Matrix& h, const SparseOperator& rw) {
  if (h.empty()) throw InputError("estimate_sigma2: empty matrix");
  if (rw.rows() != h.rows()) throw ShapeError("estimate_sigma2: operator/feature row mismatch");
  const Matrix smoothed = spmm(rw, h);
  return frobenius_norm_sq(h - smoothed) / static_cast<double>(h.size());
}

// U · diag(response) · Uᵀ · x
inline Matrix spectral_apply_response(const EigenDecomposition& ed, std::span<const double> response,
                                      const Matrix& x) {
  if (x.rows() != ed.size()) throw ShapeError("spectral_apply: feature rows do not match graph size");
  if (response.size() != ed.size()) throw ShapeError("spectral_apply: response length mismatch");
  Matrix coeffs = matmul_tn(ed.eigenvectors, x);
  for (std::size_t k = 0; k < coeffs.rows(); ++k)
    for (double& v : coeffs.row(k)) v *= response[k];
  return matmul(ed.eigenvectors, coeffs);
}

template <typename Filter>
std::vector<double> filter_response(const EigenDecomposition& ed, Filter&& f) {
  std::vector<double> r(ed.size());
  for (std::size_t k = 0; k < ed.size(); ++k) r[k] = f(ed.eigenvalues[k]);
  return r;
}

/// Exact spectral filtering U f(Λ) Uᵀ x.
template <typename Filter>
Matrix spectral_apply_exact(const EigenDecomposition& ed, Filter&& f, const Matrix& x) {
  const auto response = filter_response(ed, f);
  return spectral_apply_response(ed, response, x);
}

inline EigenDecomposition laplacian_eigen(const Graph& g) {
  return eigh_symmetric(normalized_laplacian(g).to_dense());
}

}  // namespace wgdn
