#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wgdn/autoencoder.hpp"
#include "wgdn/errors.hpp"
#include "wgdn/graph.hpp"
#include "wgdn/kernels.hpp"
#include "wgdn/linalg.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/probe.hpp"
#include "wgdn/random.hpp"
#include "wgdn/remez.hpp"

namespace wgdn {

// Spectral reconstruction error S = (g_d g_c − 1)² E[x*²] + g_d² σ².
inline double spectral_error(double gc, double gd, double energy, double sigma2) {
  const double bias = gd * gc - 1.0;
  return bias * bias * energy + gd * gd * sigma2;
}

// Per-spectrum variance of the recovered signal for zero-mean inputs
// (VAR[x*_i] = E[x*²_i]): (g_d g_c)² VAR[x*] + g_d² σ².
inline double spectral_variance(double gc, double gd, double energy, double sigma2) {
  const double gain = gd * gc;
  return gain * gain * energy + gd * gd * sigma2;
}

struct SpectralRecord {
  double lambda = 0.0;
  double energy = 0.0;
  double gc = 0.0;
  double gd = 0.0;
  double gw = 0.0;  // per-spectrum Wiener response
  double error = 0.0;
};

struct SpectralReport {
  std::vector<SpectralRecord> records;
  double total = 0.0;     // Σ S
  double variance = 0.0;  // Σ VAR[x̂_i]
};

template <typename Deconv>
SpectralReport spectral_report(const KernelSpec& k, std::span<const double> lambdas, std::span<const double> energies,
                               double sigma2, Deconv&& gd_of) {
  if (lambdas.size() != energies.size()) throw ShapeError("spectral_report: lambda/energy length mismatch");
  SpectralReport r;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    SpectralRecord rec;
    rec.lambda = lambdas[i];
    rec.energy = energies[i];
    rec.gc = eval_conv(k, rec.lambda);
    rec.gd = gd_of(rec.lambda, rec.energy);
    rec.gw = eval_wiener_spectral(k, rec.lambda, sigma2, rec.energy);
    rec.error = spectral_error(rec.gc, rec.gd, rec.energy, sigma2);
    r.total += rec.error;
    r.variance += spectral_variance(rec.gc, rec.gd, rec.energy, sigma2);
    r.records.push_back(rec);
  }
  return r;
}

struct Prop1Report {
  double analytic_mse = 0.0;      // Σ σ²/g_c²; +inf if some g_c = 0
  double clamped_noise_mse = 0.0;  // Σ σ² g_d² with the clamped inverse
  double max_term = 0.0;
  double max_term_lambda = 0.0;
  bool near_singular = false;  // some |g_c| below the clamp
  std::vector<double> terms;
};

/// Inverse-filter reconstruction MSE, Σ σ²/g_c²(λ_i).
inline Prop1Report verify_prop1(const KernelSpec& k, std::span<const double> lambdas, double sigma2,
                                double clamp = kDefaultInverseClamp) {
  Prop1Report r;
  for (double lam : lambdas) {
    const double gc = eval_conv(k, lam);
    const double term = gc == 0.0 ? (sigma2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()) : sigma2 / (gc * gc);
    const double gd = eval_inverse(k, lam, clamp);
    r.terms.push_back(term);
    r.analytic_mse += term;
    r.clamped_noise_mse += sigma2 * gd * gd;
    if (std::abs(gc) < clamp) r.near_singular = true;
    if (term > r.max_term || r.terms.size() == 1) {
      r.max_term = term;
      r.max_term_lambda = lam;
    }
  }
  return r;
}

struct Prop2Report {
  SpectralReport wiener;
  SpectralReport inverse;
  double wiener_closed_form = 0.0;  // Σ E_i σ² / (E_i g_c² + σ²)
  double wiener_variance_regular = 0.0;  // spectra with g_c ≠ 0
  double inverse_variance_exact = 0.0;   // same spectra, g_d = 1/g_c
  bool mse_holds = false;
  bool variance_holds = false;
  bool strict = false;  // MSE_wiener < MSE_inverse
  bool closed_form_matches = false;

  bool holds() const { return mse_holds && variance_holds && closed_form_matches; }
};

/// Wiener vs inverse recovery with per-spectrum energies. The inverse is the
/// kernel's inverse filter (clamped for gcn).
inline Prop2Report verify_prop2(const KernelSpec& k, std::span<const double> lambdas, std::span<const double> energies,
                                double sigma2, double clamp = kDefaultInverseClamp) {
  for (double e : energies)
    if (!(e > 0.0)) throw InputError("verify_prop2: energies must be positive");
  Prop2Report r;
  r.wiener = spectral_report(k, lambdas, energies, sigma2,
                             [&](double lam, double e) { return eval_wiener_spectral(k, lam, sigma2, e); });
  r.inverse = spectral_report(k, lambdas, energies, sigma2, [&](double lam, double) { return eval_inverse(k, lam, clamp); });
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double gc = eval_conv(k, lambdas[i]);
    // E σ² / (E g_c² + σ²); with g_c = σ² = 0 nothing is recoverable and the error is E.
    const double denom = energies[i] * gc * gc + sigma2;
    r.wiener_closed_form += denom == 0.0 ? energies[i] : energies[i] * sigma2 / denom;
  }
  const double scale = std::max(1.0, std::abs(r.inverse.total));
  r.mse_holds = r.wiener.total <= r.inverse.total + 1e-12 * scale;
  r.strict = r.wiener.total < r.inverse.total;
  // Variance is compared against the exact inverse 1/g_c on spectra where it exists;
  // the clamp can shrink the inverse below the Wiener gain near g_c = 0.
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double gc = eval_conv(k, lambdas[i]);
    if (gc == 0.0) continue;
    r.wiener_variance_regular += spectral_variance(gc, r.wiener.records[i].gd, energies[i], sigma2);
    r.inverse_variance_exact += spectral_variance(gc, 1.0 / gc, energies[i], sigma2);
  }
  r.variance_holds = r.wiener_variance_regular <=
                     r.inverse_variance_exact + 1e-12 * std::max(1.0, std::abs(r.inverse_variance_exact));
  r.closed_form_matches =
      std::abs(r.wiener.total - r.wiener_closed_form) <= 1e-9 * std::max(1.0, std::abs(r.wiener_closed_form));
  return r;
}

struct Prop3Spectrum {
  double lambda = 0.0;
  double energy = 0.0;
  bool precondition = false;  // E_i ≤ x̄*²_γ1 ≤ x̄*²_γ2
  bool singular = false;      // g_c = 0: inverse undefined
  double s_gamma1 = 0.0;
  double s_gamma2 = 0.0;
  double s_inverse = 0.0;
  bool ordered = false;

  bool checked() const { return precondition && !singular; }
};

struct Prop3Report {
  std::vector<Prop3Spectrum> spectra;
  double variance_gamma1 = 0.0;
  double variance_gamma2 = 0.0;
  double variance_inverse = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t violations = 0;

  bool holds() const { return violations == 0; }
};

/// Per-spectrum ordering S(ḡ_w,γ1) ≤ S(ḡ_w,γ2) ≤ S(1/g_c), asserted only on
/// spectra that satisfy the energy precondition. The inverse is exact 1/g_c.
inline Prop3Report verify_prop3(const KernelSpec& k, std::span<const double> lambdas, std::span<const double> energies,
                                double sigma2, double avg_energy, double gamma1, double gamma2, double tol = 1e-12) {
  if (lambdas.size() != energies.size()) throw ShapeError("verify_prop3: lambda/energy length mismatch");
  const WienerSpec w1{k, sigma2, avg_energy, gamma1};
  const WienerSpec w2{k, sigma2, avg_energy, gamma2};
  const double level1 = gamma1 * avg_energy;
  const double level2 = gamma2 * avg_energy;
  Prop3Report r;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    Prop3Spectrum s;
    s.lambda = lambdas[i];
    s.energy = energies[i];
    const double gc = eval_conv(k, s.lambda);
    s.precondition = s.energy <= level1 && level1 <= level2;
    s.singular = gc == 0.0;
    const double g1 = eval_wiener(w1, s.lambda);
    const double g2 = eval_wiener(w2, s.lambda);
    s.s_gamma1 = spectral_error(gc, g1, s.energy, sigma2);
    s.s_gamma2 = spectral_error(gc, g2, s.energy, sigma2);
    if (!s.singular) {
      s.s_inverse = spectral_error(gc, 1.0 / gc, s.energy, sigma2);
      r.variance_gamma1 += spectral_variance(gc, g1, s.energy, sigma2);
      r.variance_gamma2 += spectral_variance(gc, g2, s.energy, sigma2);
      r.variance_inverse += spectral_variance(gc, 1.0 / gc, s.energy, sigma2);
    }
    s.ordered = s.s_gamma1 <= s.s_gamma2 + tol * std::max(1.0, std::abs(s.s_gamma2)) &&
                s.s_gamma2 <= s.s_inverse + tol * std::max(1.0, std::abs(s.s_inverse));
    if (s.checked()) {
      ++r.checked;
      if (!s.ordered) ++r.violations;
    } else {
      ++r.skipped;
    }
    r.spectra.push_back(s);
  }
  return r;
}

struct ReconstructionFilter {
  enum class Kind { inverse, wiener_spectral, wiener_average };
  Kind kind = Kind::inverse;
  double gamma = 1.0;  // wiener_average only

  static ReconstructionFilter inverse() { return {Kind::inverse, 1.0}; }
  static ReconstructionFilter wiener() { return {Kind::wiener_spectral, 1.0}; }
  static ReconstructionFilter wiener_average(double gamma) { return {Kind::wiener_average, gamma}; }
};

struct MonteCarloResult {
  double empirical_mse = 0.0;  // mean of ‖x − x̂‖² per signal column
  double analytic_mse = 0.0;   // Σ_i S(λ_i, x*_i, σ, g_c, g_d) for the drawn x
  std::size_t trials = 0;
  std::vector<double> lambdas;
  std::vector<double> energies;  // realised spectral energies (x*_i)², column mean
  double signal_norm_sq = 0.0;
};

/// Draws x (standard normal columns) once, then per trial ĥ = U g_c(Λ) Uᵀ x + ε
/// with ε ~ N(0, σ²), recovers x̂ = U g_d(Λ) Uᵀ ĥ and averages ‖x − x̂‖².
/// The signal and the noise use separate child seeds, so runs with the same
/// seed and different filters see identical draws.
inline MonteCarloResult monte_carlo_reconstruction(const GraphOperators& ops, const KernelSpec& k,
                                                   ReconstructionFilter filter, double sigma, std::size_t trials,
                                                   std::uint64_t seed, std::size_t columns = 1,
                                                   double clamp = kDefaultInverseClamp) {
  if (trials == 0) throw InputError("monte_carlo_reconstruction: trials must be at least 1");
  if (!ops.eigen) throw InputError("monte_carlo_reconstruction: needs an eigen-decomposition");
  const auto& ed = *ops.eigen;
  const std::size_t n = ed.size();

  SeededRng signal_rng(derive_seed(seed, "signal"));
  SeededRng noise_rng(derive_seed(seed, "noise"));
  Matrix x(n, columns);
  for (double& v : x.data()) v = signal_rng.normal();

  const Matrix spectral = matmul_tn(ed.eigenvectors, x);
  MonteCarloResult r;
  r.trials = trials;
  r.lambdas = ed.eigenvalues;
  r.energies.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < columns; ++c) r.energies[i] += spectral(i, c) * spectral(i, c);
    r.energies[i] /= static_cast<double>(columns);
  }
  r.signal_norm_sq = frobenius_norm_sq(x);

  const double sigma2 = sigma * sigma;
  double avg_energy = 0.0;
  for (double e : r.energies) avg_energy += e;
  avg_energy /= static_cast<double>(n);

  std::vector<double> gc(n), gd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = ed.eigenvalues[i];
    gc[i] = eval_conv(k, lam);
    switch (filter.kind) {
      case ReconstructionFilter::Kind::inverse: gd[i] = eval_inverse(k, lam, clamp); break;
      case ReconstructionFilter::Kind::wiener_spectral:
        gd[i] = r.energies[i] > 0.0 ? eval_wiener_spectral(k, lam, sigma2, r.energies[i]) : 0.0;
        break;
      case ReconstructionFilter::Kind::wiener_average:
        gd[i] = eval_wiener(WienerSpec{k, sigma2, avg_energy, filter.gamma}, lam);
        break;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < columns; ++c)
      r.analytic_mse += spectral_error(gc[i], gd[i], spectral(i, c) * spectral(i, c), sigma2);
  r.analytic_mse /= static_cast<double>(columns);

  const Matrix convolved = spectral_apply_response(ed, gc, x);
  double total = 0.0;
  Matrix noisy(n, columns);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t k2 = 0; k2 < noisy.size(); ++k2) noisy.data()[k2] = convolved.data()[k2] + sigma * noise_rng.normal();
    const Matrix recovered = spectral_apply_response(ed, gd, noisy);
    total += frobenius_norm_sq(x - recovered);
  }
  r.empirical_mse = total / static_cast<double>(trials * columns);
  return r;
}

struct SweepRow {
  double beta = 0.0;
  DecoderMode mode = DecoderMode::wiener;
  bool augment = true;
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // mean of the last `final_window` epoch losses
  double probe_accuracy = 0.0;
};

struct SweepOptions {
  std::size_t final_window = 10;
  ProbeOptions probe{};
};

inline double tail_mean(std::span<const double> history, std::size_t window) {
  if (history.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t w = std::min(std::max<std::size_t>(window, 1), history.size());
  double s = 0.0;
  for (std::size_t i = history.size() - w; i < history.size(); ++i) s += history[i];
  return s / static_cast<double>(w);
}

/// Trains one model per (β, decoder mode) cell from the template config and
/// records losses plus linear-probe accuracy of the final embedding. An empty
/// label span skips the probe (accuracy reported as NaN).
inline std::vector<SweepRow> stability_sweep(const ModelConfig& tmpl, std::span<const double> betas,
                                             std::span<const DecoderMode> modes, const GraphOperators& ops,
                                             const Matrix& x, std::span<const int> labels, const SweepOptions& opt = {}) {
  std::vector<SweepRow> rows;
  for (double beta : betas) {
    if (!(beta >= 0.0)) throw InputError("stability_sweep: betas must be non-negative");
    for (DecoderMode mode : modes) {
      ModelConfig cfg = tmpl;
      cfg.beta = beta;
      cfg.decoder_mode = mode;
      const TrainResult tr = train(cfg, ops, x);
      SweepRow row;
      row.beta = beta;
      row.mode = mode;
      row.augment = cfg.augment;
      row.seed = cfg.seed;
      row.initial_loss = tr.history.empty() ? std::numeric_limits<double>::quiet_NaN() : tr.history.front();
      row.final_loss = tail_mean(tr.history, opt.final_window);
      if (labels.empty()) {
        row.probe_accuracy = std::numeric_limits<double>::quiet_NaN();
      } else {
        ProbeOptions po = opt.probe;
        po.seed = cfg.seed;
        row.probe_accuracy = logistic_probe(tr.embedding, labels, po).accuracy;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Verification suite

enum class CheckStatus { pass, fail, skip };

inline std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skip: return "skip";
  }
  return "?";
}

struct CheckRow {
  std::string check;
  std::string case_id;
  std::string detail;
  double lhs = 0.0;
  double rhs = 0.0;
  CheckStatus status = CheckStatus::pass;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t prop2_instances = 50;
  std::size_t prop3_instances = 20;
  std::size_t remez_graphs = 5;
  std::size_t graph_nodes = 20;
  double gamma1 = 1.0;
  double gamma2 = 10.0;
  double mc_sigma = 0.3;
  std::size_t mc_trials = 10000;
  double mc_tolerance = 0.05;  // relative, empirical vs analytic
  double tolerance = 1e-8;     // relative, polynomial vs exact spectral path
};

inline KernelSpec kernel_by_index(std::size_t i) {
  static constexpr KernelKind kinds[] = {KernelKind::gcn, KernelKind::heat, KernelKind::ppr};
  return KernelSpec{kinds[i % 3], 1.0, 0.2};
}

// Eigenvalues of a random small SBM graph: a spectrum from a real decomposition.
inline std::vector<double> random_spectrum(SeededRng& rng, std::size_t min_nodes, std::size_t max_nodes) {
  const std::size_t n = min_nodes + rng.below(max_nodes - min_nodes + 1);
  const std::size_t half = n / 2;
  const double p_in = rng.uniform(0.2, 0.6);
  const double p_out = rng.uniform(0.0, 0.15);
  const auto lg = generate_sbm({half, n - half}, p_in, p_out, rng.next_u64());
  return laplacian_eigen(lg.graph).eigenvalues;
}

/// Runs the filter property checks, a Monte Carlo cross-check and the
/// polynomial-versus-exact filter comparison. One row per checked item.
inline std::vector<CheckRow> run_verification(const VerifyOptions& opt) {
  std::vector<CheckRow> rows;
  auto status = [](bool ok) { return ok ? CheckStatus::pass : CheckStatus::fail; };
  SeededRng rng(derive_seed(opt.seed, "verify"));

  for (std::size_t inst = 0; inst < opt.prop2_instances; ++inst) {
    const KernelSpec k = kernel_by_index(inst);
    const auto lambdas = random_spectrum(rng, 5, 30);
    std::vector<double> energies(lambdas.size());
    for (double& e : energies) e = rng.uniform(0.01, 2.0);
    const double sigma2 = inst % 10 == 9 ? 0.0 : rng.uniform(0.01, 1.0);
    const auto r = verify_prop2(k, lambdas, energies, sigma2);
    rows.push_back({"prop2", std::to_string(inst), std::string(to_string(k.kind)) + " sigma2=" + std::to_string(sigma2),
                    r.wiener.total, r.inverse.total, status(r.holds() && (sigma2 == 0.0 || r.strict))});
  }

  for (std::size_t inst = 0; inst < opt.prop3_instances; ++inst) {
    const KernelSpec k = kernel_by_index(inst);
    const auto lambdas = random_spectrum(rng, 5, 30);
    std::vector<double> energies(lambdas.size());
    for (double& e : energies) e = rng.uniform(0.01, 2.0);
    double avg = 0.0;
    for (double e : energies) avg += e;
    avg /= static_cast<double>(energies.size());
    const double sigma2 = rng.uniform(0.01, 1.0);
    const auto r = verify_prop3(k, lambdas, energies, sigma2, avg, opt.gamma1, opt.gamma2);
    for (std::size_t i = 0; i < r.spectra.size(); ++i) {
      const auto& s = r.spectra[i];
      rows.push_back({"prop3", std::to_string(inst) + ":" + std::to_string(i),
                      std::string(to_string(k.kind)) + " lambda=" + std::to_string(s.lambda), s.s_gamma1, s.s_gamma2,
                      s.checked() ? status(s.ordered) : CheckStatus::skip});
    }
  }

  {
    const auto lg = generate_sbm({opt.graph_nodes / 2, opt.graph_nodes - opt.graph_nodes / 2}, 0.4, 0.05,
                                 derive_seed(opt.seed, "mc-graph"));
    const auto ops = GraphOperators::build(lg.graph, true);
    const KernelSpec heat{KernelKind::heat, 1.0, 0.2};
    const std::uint64_t mc_seed = derive_seed(opt.seed, "mc");
    const auto inv = monte_carlo_reconstruction(ops, heat, ReconstructionFilter::inverse(), opt.mc_sigma, opt.mc_trials, mc_seed);
    const auto wie = monte_carlo_reconstruction(ops, heat, ReconstructionFilter::wiener(), opt.mc_sigma, opt.mc_trials, mc_seed);
    const double sigma2 = opt.mc_sigma * opt.mc_sigma;
    const double inv_analytic = verify_prop1(heat, inv.lambdas, sigma2).analytic_mse;
    const double wie_analytic = verify_prop2(heat, wie.lambdas, wie.energies, sigma2).wiener.total;
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    rows.push_back({"mc_inverse", "heat", "empirical vs analytic", inv.empirical_mse, inv_analytic,
                    status(rel(inv.empirical_mse, inv_analytic) <= opt.mc_tolerance)});
    rows.push_back({"mc_wiener", "heat", "empirical vs analytic", wie.empirical_mse, wie_analytic,
                    status(rel(wie.empirical_mse, wie_analytic) <= opt.mc_tolerance)});
    rows.push_back({"mc_paired", "heat", "wiener < inverse", wie.empirical_mse, inv.empirical_mse,
                    status(wie.empirical_mse < inv.empirical_mse)});
  }

  for (std::size_t gi = 0; gi < opt.remez_graphs; ++gi) {
    const std::size_t n = 10 + rng.below(40);
    const auto lg = generate_sbm({n / 2, n - n / 2}, 0.3, 0.05, rng.next_u64());
    const auto ops = GraphOperators::build(lg.graph, true);
    Matrix x(n, 3);
    for (double& v : x.data()) v = rng.normal();
    for (std::size_t ki = 0; ki < 3; ++ki) {
      const KernelSpec k = kernel_by_index(ki);
      const WienerSpec w{k, rng.uniform(0.05, 0.5), 1.0, 1.0};
      const auto p = remez_fit([&](double lam) { return eval_wiener(w, lam); }, default_remez_order(k.kind));
      const Matrix poly = apply_matrix_polynomial(ops.laplacian, p, x);
      const Matrix exact = spectral_apply_exact(*ops.eigen, [&](double lam) { return poly_eval(p, lam); }, x);
      const double err = relative_error(poly, exact);
      rows.push_back({"remez_vs_exact", std::to_string(gi) + ":" + std::string(to_string(k.kind)),
                      "N=" + std::to_string(n), err, opt.tolerance, status(err <= opt.tolerance)});
    }
  }
  return rows;
}

inline bool all_passed(std::span<const CheckRow> rows) {
  return std::none_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.status == CheckStatus::fail; });
}

}  // namespace wgdn
