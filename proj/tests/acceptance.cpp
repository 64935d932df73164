// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "wgdn/config.hpp"
#include "wgdn/datasets.hpp"
#include "wgdn/eval.hpp"
#include "wgdn/probe.hpp"

using namespace wgdn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> random_energies(SeededRng& rng, std::size_t n) {
  std::vector<double> e(n);
  for (double& v : e) v = rng.uniform(0.01, 2.0);
  return e;
}

Matrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

// 1. Wiener total error never exceeds the inverse one, strictly when noise is present.
Outcome wiener_vs_inverse_analytic() {
  const auto t0 = Clock::now();
  SeededRng rng(derive_seed(1, "criterion1"));
  std::size_t bad = 0, strict_needed = 0;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    const KernelSpec k = kernel_by_index(inst);
    const auto lambdas = random_spectrum(rng, 5, 25);
    const auto e = random_energies(rng, lambdas.size());
    const double sigma2 = inst % 10 == 9 ? 0.0 : rng.uniform(0.01, 1.0);
    const auto r = verify_prop2(k, lambdas, e, sigma2);
    bool any_regular = false;
    for (double lam : lambdas) any_regular |= eval_conv(k, lam) != 0.0;
    const bool need_strict = sigma2 > 0.0 && any_regular;
    strict_needed += need_strict;
    if (!r.mse_holds || (need_strict && !r.strict)) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 1.0,
          fmt("50 instances, %zu violations, %zu strict cases, %.3f s (limit 1 s)", bad, strict_needed, secs)};
}

// 2. Monte Carlo recovery matches the analytic sums.
Outcome wiener_vs_inverse_monte_carlo() {
  const auto t0 = Clock::now();
  const KernelSpec heat{KernelKind::heat, 1.0, 0.2};
  const auto ops = GraphOperators::build(generate_sbm({10, 10}, 0.4, 0.05, 8).graph, true);
  const double sigma = 0.3;
  const auto inv = monte_carlo_reconstruction(ops, heat, ReconstructionFilter::inverse(), sigma, 10000, 9);
  const auto wie = monte_carlo_reconstruction(ops, heat, ReconstructionFilter::wiener(), sigma, 10000, 9);
  const double a_inv = verify_prop1(heat, inv.lambdas, sigma * sigma).analytic_mse;
  const double a_wie = verify_prop2(heat, wie.lambdas, wie.energies, sigma * sigma).wiener.total;
  const double rel_inv = std::abs(inv.empirical_mse - a_inv) / a_inv;
  const double rel_wie = std::abs(wie.empirical_mse - a_wie) / a_wie;
  const double secs = seconds_since(t0);
  const bool ok = rel_inv <= 0.05 && rel_wie <= 0.05 && wie.empirical_mse < inv.empirical_mse && secs < 30.0;
  return {ok, fmt("inverse %.4f vs %.4f (rel %.3f), wiener %.4f vs %.4f (rel %.3f), %.2f s", inv.empirical_mse, a_inv,
                  rel_inv, wie.empirical_mse, a_wie, rel_wie, secs)};
}

// 3. Three-way ordering of the per-spectrum error on qualifying spectra.
Outcome gamma_ordering() {
  SeededRng rng(derive_seed(1, "criterion3"));
  std::size_t checked = 0, violations = 0;
  for (std::size_t inst = 0; inst < 20; ++inst) {
    const KernelSpec k = kernel_by_index(inst);
    const auto lambdas = random_spectrum(rng, 5, 25);
    const auto e = random_energies(rng, lambdas.size());
    double avg = 0.0;
    for (double v : e) avg += v;
    avg /= static_cast<double>(e.size());
    const auto r = verify_prop3(k, lambdas, e, rng.uniform(0.01, 1.0), avg, 1.0, 10.0, 1e-12);
    checked += r.checked;
    violations += r.violations;
  }
  return {violations == 0 && checked > 0, fmt("%zu spectra checked, %zu violations", checked, violations)};
}

// 4. Equioscillation, exact reproduction and grid bound.
Outcome remez_correctness() {
  double worst_alt = 0.0, worst_poly = 0.0, worst_ratio = 0.0;
  const auto alternation = [&](const std::function<double(double)>& f, std::size_t order) {
    const auto p = remez_fit(f, order);
    for (std::size_t j = 0; j < p.nodes.size(); ++j) {
      const double expect = (j % 2 ? -1.0 : 1.0) * p.leveled_error;
      worst_alt = std::max(worst_alt, std::abs(f(p.nodes[j]) - poly_eval(p, p.nodes[j]) - expect));
    }
    return p;
  };
  for (auto kind : {KernelKind::gcn, KernelKind::heat, KernelKind::ppr}) {
    const KernelSpec k{kind, 1.0, 0.2};
    alternation([k](double lam) { return eval_conv(k, lam); }, default_remez_order(kind));
    const WienerSpec w{k, 0.3, 1.0, 1.0};
    alternation([w](double lam) { return eval_wiener(w, lam); }, default_remez_order(kind));
  }
  SeededRng rng(derive_seed(1, "criterion4"));
  for (std::size_t deg = 0; deg <= 6; ++deg) {
    std::vector<double> c(deg + 1);
    for (double& v : c) v = rng.uniform(-1, 1);
    const auto q = RemezPolynomial::from_coeffs(c);
    const auto p = alternation([q](double t) { return poly_eval(q, t); }, std::max<std::size_t>(deg, 1) + 1);
    worst_poly = std::max(worst_poly, std::abs(p.leveled_error));
  }
  for (auto kind : {KernelKind::heat, KernelKind::ppr}) {
    const KernelSpec k{kind, 1.0, 0.2};
    const auto f = [k](double lam) { return eval_conv(k, lam); };
    const auto p = remez_fit(f, 2);
    worst_ratio = std::max(worst_ratio, max_grid_error(f, p, 1001) / std::abs(p.leveled_error));
  }
  const bool ok = worst_alt <= 1e-8 && worst_poly <= 1e-9 && worst_ratio <= 3.0;
  return {ok, fmt("alternation dev %.2e (<=1e-8), polynomial |e| %.2e (<=1e-9), grid/|e| %.3f (<=3)", worst_alt,
                  worst_poly, worst_ratio)};
}

// 5. Sparse recurrence agrees with the eigendecomposition path.
Outcome decomposition_free_path() {
  SeededRng rng(derive_seed(1, "criterion5"));
  double worst = 0.0;
  std::size_t max_n = 0;
  for (std::size_t g = 0; g < 20; ++g) {
    const std::size_t a = 10 + rng.below(91), b = 10 + rng.below(91);
    max_n = std::max(max_n, a + b);
    const auto lg = generate_sbm({a, b}, rng.uniform(0.05, 0.3), rng.uniform(0.0, 0.05), rng.next_u64());
    const auto ops = GraphOperators::build(lg.graph, true);
    const Matrix x = random_matrix(rng, a + b, 4);
    for (auto kind : {KernelKind::gcn, KernelKind::heat, KernelKind::ppr}) {
      const KernelSpec k{kind, 1.0, 0.2};
      const auto p = precompute_propagation(ops, k, default_remez_order(kind)).polynomial();
      const Matrix sparse = apply_matrix_polynomial(ops.laplacian, p, x);
      const Matrix exact = spectral_apply_exact(*ops.eigen, [&](double lam) { return poly_eval(p, lam); }, x);
      worst = std::max(worst, relative_error(sparse, exact));
    }
  }
  return {worst <= 1e-8, fmt("20 graphs (N <= %zu), 3 kernels, worst relative error %.2e (<=1e-8)", max_n, worst)};
}

// 6. Polynomial filtering cost grows linearly with the edge count.
Outcome complexity_scaling() {
  const std::size_t order = default_remez_order(KernelKind::gcn);
  const KernelSpec heat{KernelKind::heat, 1.0, 0.2};
  const auto p = remez_fit([heat](double lam) { return eval_conv(heat, lam); }, order);
  SeededRng rng(derive_seed(1, "criterion6"));
  const Matrix x = random_matrix(rng, 2000, 16);
  const auto time_graph = [&](double p_in, double p_out, std::size_t& edges) {
    const auto lg = generate_sbm({1000, 1000}, p_in, p_out, 6);
    edges = lg.graph.num_edges();
    const auto l = normalized_laplacian(lg.graph);
    std::vector<double> runs;
    double sink = 0.0;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = Clock::now();
      sink += apply_matrix_polynomial(l, p, x)(0, 0);
      runs.push_back(seconds_since(t0));
    }
    if (std::isnan(sink)) runs.assign(runs.size(), 0.0);
    return median(runs);
  };
  std::size_t e1 = 0, e2 = 0;
  const double t1 = time_graph(0.04, 0.01, e1);
  const double t2 = time_graph(0.08, 0.02, e2);
  const double ratio = t2 / t1;
  return {ratio >= 1.5 && ratio <= 3.0, fmt("|E| %zu -> %zu (x%.2f), median time %.4f s -> %.4f s, ratio %.2f in [1.5, 3]",
                                            e1, e2, static_cast<double>(e2) / static_cast<double>(e1), t1, t2, ratio)};
}

// 7. Analytic gradients against central differences.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  const Graph g = wgdn::testing::gradcheck_graph();
  const auto ops = GraphOperators::build(g, true);
  const Matrix x = wgdn::testing::gradcheck_features();
  double worst = 0.0;
  std::size_t checked = 0, instances = 0;
  for (const auto& cfg : wgdn::testing::gradcheck_configs()) {
    SeededRng rng(cfg.seed);
    const Params p = init_params(cfg, rng);
    const auto r = wgdn::testing::check_gradients(cfg, ops, x, p, derive_seed(cfg.seed, "noise"));
    worst = std::max(worst, r.worst);
    checked += r.checked;
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          fmt("%zu instances, %zu parameters, worst relative error %.2e (<=1e-4), %.2f s", instances, checked, worst,
              secs)};
}

// 8. Karate training halves the loss and reruns identically.
Outcome karate_training() {
  const RunConfig rc = load_run_config(std::string(WGDN_CONFIG_DIR) + "/karate.json");
  const Dataset data = load_dataset(rc.dataset, rc.seed);
  const ModelConfig cfg = resolve_config(rc.model, data.features);
  const auto a = train(cfg, data.graph, data.features);
  const auto b = train(cfg, data.graph, data.features);
  const double ratio = a.history.back() / a.history.front();
  const bool same = a.history == b.history && a.embedding == b.embedding;
  return {ratio < 0.5 && same, fmt("loss %.4f -> %.4f (ratio %.3f < 0.5), rerun %s", a.history.front(),
                                   a.history.back(), ratio, same ? "identical" : "differs")};
}

ModelConfig sbm_model(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seed = seed;
  cfg.lr = 1e-3;
  cfg.epochs = 200;
  return cfg;
}

// 9. Inverse/Wiener loss ratio grows with augmentation strength.
Outcome stability_analog() {
  const auto t0 = Clock::now();
  const std::vector<double> betas{0.0, 0.5, 1.0};
  const std::vector<DecoderMode> modes{DecoderMode::wiener, DecoderMode::inverse};
  std::size_t monotone = 0;
  std::string ratios;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = make_sbm_dataset(SyntheticSpec{}, seed);
    const auto ops = GraphOperators::build(data.graph);
    const auto rows = stability_sweep(sbm_model(seed), betas, modes, ops, data.features, {});
    double prev = -1.0;
    bool ok = true;
    ratios += " [";
    for (std::size_t b = 0; b < betas.size(); ++b) {
      const double r = rows[2 * b + 1].final_loss / rows[2 * b].final_loss;
      ratios += fmt(b ? " %.3f" : "%.3f", r);
      ok &= r >= prev;
      prev = r;
    }
    ratios += "]";
    monotone += ok;
  }
  const double secs = seconds_since(t0);
  return {monotone >= 4 && secs < 300.0,
          fmt("monotone in %zu/5 seeds (>=4), ratios%s, %.1f s", monotone, ratios.c_str(), secs)};
}

// 10. Complete model, no augmentation, and neither component.
Outcome ablation_analog() {
  const auto t0 = Clock::now();
  const Variant variants[] = {Variant::full, Variant::no_augment, Variant::no_augment_no_wiener};
  std::vector<double> acc[3];
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = make_sbm_dataset(SyntheticSpec{}, seed);
    const auto ops = GraphOperators::build(data.graph);
    for (std::size_t v = 0; v < 3; ++v) {
      const auto tr = train(with_variant(sbm_model(seed), variants[v]), ops, data.features);
      acc[v].push_back(logistic_probe(tr.embedding, data.labels, ProbeOptions{.seed = seed}).accuracy);
    }
  }
  const double full = median(acc[0]), no_a = median(acc[1]), no_aw = median(acc[2]);
  const double secs = seconds_since(t0);
  const bool ok = full >= no_a && no_a >= no_aw && full >= 0.9 && secs < 600.0;
  return {ok, fmt("median accuracy full %.4f >= no-augment %.4f >= no-augment-no-wiener %.4f, full >= 0.9, %.1f s",
                  full, no_a, no_aw, secs)};
}

// 11. Probe sanity on a permutation null and on separable blobs.
Outcome probe_correctness() {
  SeededRng rng(derive_seed(1, "criterion11"));
  const Matrix noise = random_matrix(rng, 400, 8);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  shuffle(std::span<int>(y), rng);
  const double null_acc = logistic_probe(noise, y, ProbeOptions{.seed = 1}).accuracy;

  Matrix blobs(200, 2);
  std::vector<int> by(200);
  for (std::size_t i = 0; i < 200; ++i) {
    by[i] = i < 100 ? 0 : 1;
    blobs(i, 0) = (by[i] == 0 ? -3.0 : 3.0) + 0.3 * rng.normal();
    blobs(i, 1) = 0.3 * rng.normal();
  }
  const double blob_acc = logistic_probe(blobs, by, ProbeOptions{.seed = 1}).accuracy;
  return {std::abs(null_acc - 0.5) <= 0.1 && blob_acc == 1.0,
          fmt("permutation null %.4f (0.5 +- 0.1), separable blobs %.4f (== 1)", null_acc, blob_acc)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"wiener vs inverse, analytic", wiener_vs_inverse_analytic},
      {"wiener vs inverse, monte carlo", wiener_vs_inverse_monte_carlo},
      {"wiener gamma ordering", gamma_ordering},
      {"remez correctness", remez_correctness},
      {"decomposition-free path", decomposition_free_path},
      {"O(K|E|) scaling", complexity_scaling},
      {"gradient check", gradient_check},
      {"karate training", karate_training},
      {"stability sweep", stability_analog},
      {"ablation ordering", ablation_analog},
      {"probe correctness", probe_correctness},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
