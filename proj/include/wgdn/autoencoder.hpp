#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/graph.hpp"
#include "wgdn/kernels.hpp"
#include "wgdn/linalg.hpp"
#include "wgdn/matrix.hpp"
#include "wgdn/random.hpp"
#include "wgdn/remez.hpp"

namespace wgdn {

enum class Aggregation { sum, avg, max };
enum class DecoderMode { wiener, inverse };
// How spectral filters are applied: Remez polynomials in L (the scalable
// path) or exact eigen-decomposition (validation on small graphs).
enum class FilterBackend { polynomial, exact };

inline std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::sum: return "sum";
    case Aggregation::avg: return "avg";
    case Aggregation::max: return "max";
  }
  return "?";
}
inline std::string_view to_string(DecoderMode m) { return m == DecoderMode::wiener ? "wiener" : "inverse"; }
inline std::string_view to_string(FilterBackend b) { return b == FilterBackend::polynomial ? "polynomial" : "exact"; }

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "avg") return Aggregation::avg;
  if (s == "max") return Aggregation::max;
  throw InputError("unknown aggregation '" + std::string(s) + "' (expected sum, avg or max)");
}
inline DecoderMode parse_decoder_mode(std::string_view s) {
  if (s == "wiener") return DecoderMode::wiener;
  if (s == "inverse") return DecoderMode::inverse;
  throw InputError("unknown decoder mode '" + std::string(s) + "' (expected wiener or inverse)");
}
inline FilterBackend parse_backend(std::string_view s) {
  if (s == "polynomial") return FilterBackend::polynomial;
  if (s == "exact") return FilterBackend::exact;
  throw InputError("unknown filter backend '" + std::string(s) + "' (expected polynomial or exact)");
}

// Polynomial order used when the config leaves it at 0.
inline std::size_t default_remez_order(KernelKind k) { return k == KernelKind::gcn ? 9 : 2; }

struct ModelConfig {
  std::size_t num_layers = 2;
  std::size_t input_dim = 0;  // 0: taken from the feature matrix
  std::size_t hidden_dim = 16;
  KernelSpec kernel{};
  std::vector<double> gammas{0.1, 1.0, 10.0};  // one per decoder channel
  double beta = 1.0;
  std::size_t remez_order = 0;  // 0: kernel default
  Aggregation agg = Aggregation::sum;
  bool last_activation = true;
  bool skip_connection = false;
  DecoderMode decoder_mode = DecoderMode::wiener;
  bool augment = true;
  FilterBackend backend = FilterBackend::polynomial;
  double inverse_clamp = kDefaultInverseClamp;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 200;

  std::size_t channels() const { return gammas.size(); }
  std::size_t order() const { return remez_order == 0 ? default_remez_order(kernel.kind) : remez_order; }
  std::size_t encoder_activation_sites() const { return last_activation ? num_layers : num_layers - 1; }

  void validate() const {
    if (num_layers < 1) throw InputError("config: num_layers must be at least 1");
    if (input_dim == 0 || hidden_dim == 0) throw InputError("config: dimensions must be positive");
    if (gammas.empty()) throw InputError("config: at least one decoder channel (gamma) is required");
    for (double g : gammas)
      if (!(g > 0.0)) throw InputError("config: gammas must be positive");
    if (!(beta >= 0.0)) throw InputError("config: beta must be non-negative");
    if (order() > kMaxRemezOrder) throw InputError("config: remez_order exceeds the cap of 16");
    if (skip_connection && num_layers < 2) throw InputError("config: skip connection needs at least 2 layers");
    if (!(lr > 0.0)) throw InputError("config: lr must be positive");
    if (!(inverse_clamp > 0.0)) throw InputError("config: inverse_clamp must be positive");
    kernel.validate();
  }
};

// Ablation variants reachable by configuration.
enum class Variant { full, no_augment, no_wiener, no_augment_no_wiener };

inline ModelConfig with_variant(ModelConfig cfg, Variant v) {
  cfg.augment = (v == Variant::full || v == Variant::no_wiener);
  cfg.decoder_mode = (v == Variant::full || v == Variant::no_augment) ? DecoderMode::wiener : DecoderMode::inverse;
  return cfg;
}

// Sparse and (optionally) spectral views of one graph, shared read-only by all passes.
struct GraphOperators {
  Graph graph;
  SparseOperator laplacian;
  SparseOperator random_walk;
  std::optional<EigenDecomposition> eigen;

  static GraphOperators build(const Graph& g, bool with_eigen = false) {
    GraphOperators ops{g, normalized_laplacian(g), random_walk_matrix(g), std::nullopt};
    if (with_eigen) ops.eigen = eigh_symmetric(ops.laplacian.to_dense());
    return ops;
  }

  std::size_t num_nodes() const { return graph.num_nodes(); }
};

// A spectral filter ready to apply: polynomial in L, or exact response over the eigenvalues.
struct FittedFilter {
  std::variant<RemezPolynomial, std::vector<double>> repr;

  bool is_polynomial() const { return std::holds_alternative<RemezPolynomial>(repr); }
  const RemezPolynomial& polynomial() const { return std::get<RemezPolynomial>(repr); }

  Matrix apply(const GraphOperators& ops, const Matrix& x) const {
    if (const auto* p = std::get_if<RemezPolynomial>(&repr)) return apply_matrix_polynomial(ops.laplacian, *p, x);
    if (!ops.eigen) throw InputError("exact filter requires an eigen-decomposition");
    return spectral_apply_response(*ops.eigen, std::get<std::vector<double>>(repr), x);
  }
};

inline FittedFilter fit_filter(const GraphOperators& ops, FilterBackend backend,
                               const std::function<double(double)>& f, std::size_t order) {
  if (backend == FilterBackend::exact) {
    if (!ops.eigen) throw InputError("exact backend requires GraphOperators built with an eigen-decomposition");
    return {filter_response(*ops.eigen, f)};
  }
  return {remez_fit(f, order)};
}

/// Encoder propagation g_c(L). gcn is exactly I − L (a degree-1 polynomial);
/// heat and ppr are Remez-approximated at `order`.
inline FittedFilter precompute_propagation(const GraphOperators& ops, const KernelSpec& k, std::size_t order,
                                           FilterBackend backend = FilterBackend::polynomial) {
  k.validate();
  if (backend == FilterBackend::polynomial && k.kind == KernelKind::gcn) {
    return {RemezPolynomial::from_coeffs({1.0, -1.0})};
  }
  return fit_filter(ops, backend, [k](double lam) { return eval_conv(k, lam); }, order);
}

// Learnable weights. Decoder layers are indexed by m − 1 for m = 1..M; layer 1
// maps D' → D and has no activation.
struct Params {
  std::vector<Matrix> encoder;
  std::vector<double> encoder_slopes;
  std::vector<std::vector<Matrix>> decoder;
  std::vector<std::vector<double>> decoder_slopes;
  std::uint64_t version = 0;

  // Every parameter block in a fixed order.
  std::vector<std::span<double>> blocks() {
    std::vector<std::span<double>> out;
    for (auto& w : encoder) out.push_back(w.data());
    out.emplace_back(encoder_slopes);
    for (auto& layer : decoder)
      for (auto& w : layer) out.push_back(w.data());
    for (auto& s : decoder_slopes) out.emplace_back(s);
    return out;
  }

  std::vector<std::span<const double>> blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& b : const_cast<Params*>(this)->blocks()) out.emplace_back(b);
    return out;
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& b : blocks()) n += b.size();
    return n;
  }
};

inline Params zeros_like(const Params& p) {
  Params z = p;
  for (auto b : z.blocks()) std::fill(b.begin(), b.end(), 0.0);
  z.version = 0;
  return z;
}

inline constexpr double kPreluInitSlope = 0.25;

inline Params init_params(const ModelConfig& cfg, SeededRng& rng) {
  cfg.validate();
  const std::size_t m_layers = cfg.num_layers;
  Params p;
  for (std::size_t l = 0; l < m_layers; ++l)
    p.encoder.push_back(glorot_init(rng, l == 0 ? cfg.input_dim : cfg.hidden_dim, cfg.hidden_dim));
  p.encoder_slopes.assign(cfg.encoder_activation_sites(), kPreluInitSlope);
  p.decoder.resize(m_layers);
  p.decoder_slopes.resize(m_layers);
  for (std::size_t m = m_layers; m >= 1; --m) {
    const std::size_t out_dim = m == 1 ? cfg.input_dim : cfg.hidden_dim;
    for (std::size_t i = 0; i < cfg.channels(); ++i) p.decoder[m - 1].push_back(glorot_init(rng, cfg.hidden_dim, out_dim));
    if (m > 1) p.decoder_slopes[m - 1].assign(cfg.channels(), kPreluInitSlope);
  }
  return p;
}

inline Matrix prelu(const Matrix& x, double slope) {
  Matrix y = x;
  for (double& v : y.data())
    if (!(v > 0.0)) v *= slope;
  return y;
}

// Gradient through PReLU; accumulates d(loss)/d(slope) into *slope_grad.
inline Matrix prelu_backward(const Matrix& grad_out, const Matrix& pre, double slope, double* slope_grad) {
  Matrix g = grad_out;
  double ds = 0.0;
  auto gs = g.data();
  auto ps = pre.data();
  for (std::size_t k = 0; k < gs.size(); ++k) {
    if (!(ps[k] > 0.0)) {
      ds += gs[k] * ps[k];
      gs[k] *= slope;
    }
  }
  if (slope_grad) *slope_grad += ds;
  return g;
}

struct EncoderLayerCache {
  Matrix input;
  Matrix pre;  // g_c(L) H W
  Matrix output;
  bool activated = true;
};

struct EncodeResult {
  Matrix embedding;  // H^(M)
  std::vector<EncoderLayerCache> layers;
};

/// H^(m+1) = φ(g_c(L) H^(m) W^(m)), φ = PReLU (skipped on the last layer
/// when last_activation is off).
inline EncodeResult encode(const Params& p, const GraphOperators& ops, const FittedFilter& conv, const Matrix& x,
                           const ModelConfig& cfg) {
  if (x.cols() != cfg.input_dim) {
    throw ShapeError("encode: feature dim " + std::to_string(x.cols()) + " != input_dim " +
                     std::to_string(cfg.input_dim));
  }
  if (x.rows() != ops.num_nodes()) throw ShapeError("encode: feature rows do not match the graph");
  EncodeResult r;
  Matrix h = x;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    EncoderLayerCache c;
    c.input = h;
    c.pre = conv.apply(ops, matmul(h, p.encoder[l]));
    c.activated = l < p.encoder_slopes.size();
    c.output = c.activated ? prelu(c.pre, p.encoder_slopes[l]) : c.pre;
    if (!c.output.all_finite()) throw NumericalError("encode: layer " + std::to_string(l) + " produced non-finite values");
    h = c.output;
    r.layers.push_back(std::move(c));
  }
  r.embedding = std::move(h);
  return r;
}

// Population variance over all entries.
inline double entry_variance(const Matrix& h) {
  if (h.empty()) return 0.0;
  double mean = 0.0;
  for (double v : h.data()) mean += v;
  mean /= static_cast<double>(h.size());
  double var = 0.0;
  for (double v : h.data()) var += (v - mean) * (v - mean);
  return var / static_cast<double>(h.size());
}

// β·E with E_ij ~ N(0, σ²_P), σ²_P the variance of all entries of h.
inline Matrix augmentation_noise(const Matrix& h, double beta, SeededRng& rng) {
  Matrix e(h.rows(), h.cols());
  const double sd = std::sqrt(entry_variance(h));
  if (beta == 0.0 || sd == 0.0) return e;
  for (double& v : e.data()) v = beta * sd * rng.normal();
  return e;
}

// Ĥ = H + β·E
inline Matrix augment(const Matrix& h, double beta, SeededRng& rng) {
  if (!(beta >= 0.0)) throw InputError("augment: beta must be non-negative");
  return h + augmentation_noise(h, beta, rng);
}

struct DecoderChannelCache {
  FittedFilter filter;
  Matrix pre;  // D_γ Ĥ W
  Matrix output;
};

// One decoder layer applied to one input stream.
struct DecoderStreamCache {
  std::size_t layer = 0;  // m
  Matrix input;
  double sigma2 = 0.0;
  double avg_energy = 0.0;
  std::vector<DecoderChannelCache> channels;
  Matrix output;
};

inline std::function<double(double)> decoder_target(const ModelConfig& cfg, double sigma2, double avg_energy,
                                                    double gamma) {
  if (cfg.decoder_mode == DecoderMode::inverse) {
    return [k = cfg.kernel, clamp = cfg.inverse_clamp](double lam) { return eval_inverse(k, lam, clamp); };
  }
  WienerSpec w{cfg.kernel, sigma2, avg_energy, gamma};
  return [w](double lam) { return eval_wiener(w, lam); };
}

inline Matrix aggregate(const std::vector<DecoderChannelCache>& ch, Aggregation agg) {
  Matrix out = ch.front().output;
  for (std::size_t i = 1; i < ch.size(); ++i) {
    if (agg == Aggregation::max) {
      auto o = out.data();
      auto z = ch[i].output.data();
      for (std::size_t k = 0; k < o.size(); ++k) o[k] = std::max(o[k], z[k]);
    } else {
      out += ch[i].output;
    }
  }
  if (agg == Aggregation::avg) out *= 1.0 / static_cast<double>(ch.size());
  return out;
}

/// Decoder layer m on one stream. Estimates σ² and x̄*² from the input, refits
/// each channel's Wiener (or inverse) filter, then
///     Z_i = φ(D_γi Ĥ W_i),   out = AGG(Z_1..Z_q).
/// With `frozen`, the filters and estimates of an earlier pass are reused.
inline DecoderStreamCache decoder_layer(const Params& p, const GraphOperators& ops, std::size_t m, const Matrix& input,
                                        const ModelConfig& cfg, const DecoderStreamCache* frozen = nullptr) {
  DecoderStreamCache c;
  c.layer = m;
  c.input = input;
  if (frozen) {
    c.sigma2 = frozen->sigma2;
    c.avg_energy = frozen->avg_energy;
  } else {
    c.sigma2 = estimate_sigma2(input, ops.random_walk);
    c.avg_energy = estimate_avg_energy(input);
  }
  for (std::size_t i = 0; i < cfg.channels(); ++i) {
    DecoderChannelCache ch{
        frozen ? frozen->channels[i].filter
               : fit_filter(ops, cfg.backend, decoder_target(cfg, c.sigma2, c.avg_energy, cfg.gammas[i]), cfg.order()),
        {},
        {}};
    ch.pre = ch.filter.apply(ops, matmul(input, p.decoder[m - 1][i]));
    ch.output = m > 1 ? prelu(ch.pre, p.decoder_slopes[m - 1][i]) : ch.pre;
    if (!ch.output.all_finite()) {
      throw NumericalError("decode: layer " + std::to_string(m) + " channel " + std::to_string(i) +
                           " produced non-finite values");
    }
    c.channels.push_back(std::move(ch));
  }
  c.output = aggregate(c.channels, cfg.agg);
  return c;
}

struct DecodeResult {
  Matrix reconstruction;
  std::vector<DecoderStreamCache> main;                  // [m − 1]
  std::vector<std::optional<DecoderStreamCache>> skip;  // [m − 1], encoder-side streams
};

/// Runs decoder layers m = M..1 starting from `top` (Ĥ^(M)). When
/// `skip_inputs` is non-empty it holds Ĥ_e^(m) for m = 1..M−1; layer m then
/// also decodes that stream with the same weights and averages both outputs.
inline DecodeResult decode(const Params& p, const GraphOperators& ops, const Matrix& top, const ModelConfig& cfg,
                           std::span<const Matrix> skip_inputs = {}, const DecodeResult* frozen = nullptr) {
  const std::size_t layers = cfg.num_layers;
  if (!skip_inputs.empty() && skip_inputs.size() != layers - 1) {
    throw ShapeError("decode: expected " + std::to_string(layers - 1) + " skip inputs");
  }
  DecodeResult r;
  r.main.resize(layers);
  r.skip.resize(layers);
  Matrix current = top;
  for (std::size_t m = layers; m >= 1; --m) {
    r.main[m - 1] = decoder_layer(p, ops, m, current, cfg, frozen ? &frozen->main[m - 1] : nullptr);
    current = r.main[m - 1].output;
    if (!skip_inputs.empty() && m < layers) {
      const DecoderStreamCache* fz = frozen && frozen->skip[m - 1] ? &*frozen->skip[m - 1] : nullptr;
      r.skip[m - 1] = decoder_layer(p, ops, m, skip_inputs[m - 1], cfg, fz);
      current += r.skip[m - 1]->output;
      current *= 0.5;
    }
  }
  r.reconstruction = std::move(current);
  return r;
}

struct ForwardCache {
  std::vector<EncoderLayerCache> encoder;
  std::vector<Matrix> noise;  // [m − 1]: noise added to H^(m); empty matrix when none
  DecodeResult decoder;
  std::uint64_t params_version = 0;

  const Matrix& reconstruction() const { return decoder.reconstruction; }
  const Matrix& embedding() const { return encoder.back().output; }
};

namespace detail {

inline ForwardCache forward_impl(const Params& p, const GraphOperators& ops, const FittedFilter& conv, const Matrix& x,
                                 const ModelConfig& cfg, SeededRng* rng, const ForwardCache* frozen) {
  ForwardCache c;
  c.params_version = p.version;
  c.encoder = encode(p, ops, conv, x, cfg).layers;
  const std::size_t layers = cfg.num_layers;
  auto hidden = [&](std::size_t m) -> const Matrix& { return c.encoder[m - 1].output; };

  if (frozen) {
    c.noise = frozen->noise;
  } else {
    c.noise.assign(layers, Matrix());
    if (rng && cfg.augment && cfg.beta > 0.0) {
      c.noise[layers - 1] = augmentation_noise(hidden(layers), cfg.beta, *rng);
      if (cfg.skip_connection)
        for (std::size_t m = layers - 1; m >= 1; --m) c.noise[m - 1] = augmentation_noise(hidden(m), cfg.beta, *rng);
    }
  }
  auto noisy = [&](std::size_t m) {
    Matrix h = hidden(m);
    if (!c.noise[m - 1].empty()) h += c.noise[m - 1];
    return h;
  };

  std::vector<Matrix> skip_inputs;
  if (cfg.skip_connection)
    for (std::size_t m = 1; m < layers; ++m) skip_inputs.push_back(noisy(m));
  c.decoder = decode(p, ops, noisy(layers), cfg, skip_inputs, frozen ? &frozen->decoder : nullptr);
  return c;
}

}  // namespace detail

/// Full forward pass: encode, augment the latent (and, with skip connection,
/// intermediate encoder outputs) when `noise_rng` is given and augmentation
/// is enabled, then decode with freshly fitted filters.
inline ForwardCache forward(const Params& p, const GraphOperators& ops, const FittedFilter& conv, const Matrix& x,
                            const ModelConfig& cfg, SeededRng* noise_rng) {
  return detail::forward_impl(p, ops, conv, x, cfg, noise_rng, nullptr);
}

inline ForwardCache skip_forward(const Params& p, const GraphOperators& ops, const FittedFilter& conv, const Matrix& x,
                                 const ModelConfig& cfg, SeededRng* noise_rng) {
  if (!cfg.skip_connection || cfg.num_layers < 2) throw InputError("skip_forward: needs skip_connection and M >= 2");
  return forward(p, ops, conv, x, cfg, noise_rng);
}

/// Forward pass that reuses the noise realisation, σ²/x̄*² estimates and fitted
/// decoder filters of `frozen`. Backward differentiates exactly this map.
inline ForwardCache replay_forward(const Params& p, const GraphOperators& ops, const FittedFilter& conv,
                                   const Matrix& x, const ModelConfig& cfg, const ForwardCache& frozen) {
  return detail::forward_impl(p, ops, conv, x, cfg, nullptr, &frozen);
}

// ‖X − X̂‖_F (not squared).
inline double loss(const Matrix& x, const Matrix& x_hat) {
  x.require_same_shape(x_hat, "loss");
  return frobenius_norm(x - x_hat);
}

namespace detail {

inline Matrix decoder_layer_backward(const DecoderStreamCache& c, const Matrix& grad_out, const Params& p,
                                     Params& grads, const GraphOperators& ops, const ModelConfig& cfg) {
  const std::size_t m = c.layer;
  const std::size_t q = c.channels.size();
  Matrix grad_in(c.input.rows(), c.input.cols());
  for (std::size_t i = 0; i < q; ++i) {
    const auto& ch = c.channels[i];
    Matrix gz = grad_out;
    if (cfg.agg == Aggregation::avg) {
      gz *= 1.0 / static_cast<double>(q);
    } else if (cfg.agg == Aggregation::max) {
      auto g = gz.data();
      for (std::size_t k = 0; k < g.size(); ++k) {
        std::size_t arg = 0;
        double best = c.channels[0].output.data()[k];
        for (std::size_t j = 1; j < q; ++j) {
          if (c.channels[j].output.data()[k] > best) {
            best = c.channels[j].output.data()[k];
            arg = j;
          }
        }
        if (arg != i) g[k] = 0.0;
      }
    }
    Matrix gy = m > 1 ? prelu_backward(gz, ch.pre, p.decoder_slopes[m - 1][i], &grads.decoder_slopes[m - 1][i]) : gz;
    const Matrix gt = ch.filter.apply(ops, gy);  // D_γ is symmetric
    grads.decoder[m - 1][i] += matmul_tn(c.input, gt);
    grad_in += matmul_nt(gt, p.decoder[m - 1][i]);
  }
  return grad_in;
}

}  // namespace detail

/// Reverse-mode gradients of ‖X − X̂‖_F with respect to every weight and
/// PReLU slope. Noise, σ²/x̄*² estimates and fitted filters are constants.
inline Params backward(const ForwardCache& c, const Matrix& x, const ModelConfig& cfg, const Params& p,
                       const GraphOperators& ops, const FittedFilter& conv) {
  if (c.params_version != p.version || c.encoder.size() != cfg.num_layers) {
    throw InputError("backward: stale forward cache (parameters changed since the forward pass)");
  }
  Params grads = zeros_like(p);
  const Matrix residual = c.reconstruction() - x;
  const double l = frobenius_norm(residual);
  if (l == 0.0) return grads;

  const std::size_t layers = cfg.num_layers;
  std::vector<Matrix> grad_hidden(layers + 1);  // [m]: d loss / d H^(m)
  for (std::size_t m = 1; m <= layers; ++m) grad_hidden[m] = Matrix(c.encoder[m - 1].output.rows(), cfg.hidden_dim);

  Matrix g = (1.0 / l) * residual;
  for (std::size_t m = 1; m <= layers; ++m) {
    const auto& skip = c.decoder.skip[m - 1];
    if (skip) {
      g *= 0.5;
      grad_hidden[m] += detail::decoder_layer_backward(*skip, g, p, grads, ops, cfg);
    }
    g = detail::decoder_layer_backward(c.decoder.main[m - 1], g, p, grads, ops, cfg);
  }
  grad_hidden[layers] += g;

  for (std::size_t l_idx = layers; l_idx-- > 0;) {
    const auto& layer = c.encoder[l_idx];
    const Matrix& gout = grad_hidden[l_idx + 1];
    Matrix gs = layer.activated
                    ? prelu_backward(gout, layer.pre, p.encoder_slopes[l_idx], &grads.encoder_slopes[l_idx])
                    : gout;
    const Matrix gt = conv.apply(ops, gs);
    grads.encoder[l_idx] = matmul_tn(layer.input, gt);
    if (l_idx > 0) grad_hidden[l_idx] += matmul_nt(gt, p.encoder[l_idx]);
  }
  return grads;
}

struct AdamState {
  Params first;
  Params second;
  std::uint64_t step = 0;

  static AdamState for_params(const Params& p) { return {zeros_like(p), zeros_like(p), 0}; }
};

// Adam with bias correction.
inline void adam_step(Params& p, const Params& grads, AdamState& st, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  auto pb = p.blocks();
  const auto gb = grads.blocks();
  auto mb = st.first.blocks();
  auto vb = st.second.blocks();
  if (pb.size() != gb.size() || pb.size() != mb.size()) throw ShapeError("adam_step: parameter layout mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (pb[b].size() != gb[b].size()) throw ShapeError("adam_step: block size mismatch");
    for (std::size_t k = 0; k < pb[b].size(); ++k) {
      const double gk = gb[b][k];
      mb[b][k] = beta1 * mb[b][k] + (1.0 - beta1) * gk;
      vb[b][k] = beta2 * vb[b][k] + (1.0 - beta2) * gk * gk;
      const double mhat = mb[b][k] / c1;
      const double vhat = vb[b][k] / c2;
      pb[b][k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  ++p.version;
}

class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

struct TrainResult {
  Params params;
  AdamState adam;
  std::vector<double> history;  // loss per epoch, measured before that epoch's update
  Matrix embedding;             // H^(M) without augmentation
};

// Fills in input_dim from x when it is 0.
inline ModelConfig resolve_config(ModelConfig cfg, const Matrix& x) {
  if (cfg.input_dim == 0) cfg.input_dim = x.cols();
  cfg.validate();
  return cfg;
}

/// Full-graph training: per epoch forward (with fresh augmentation and filter
/// refit), loss, backward, Adam step.
inline TrainResult train(const ModelConfig& config, const GraphOperators& ops, const Matrix& x) {
  const ModelConfig cfg = resolve_config(config, x);
  if (x.rows() != ops.num_nodes()) throw ShapeError("train: feature rows do not match the graph");
  if (!x.all_finite()) throw InputError("train: features contain non-finite values");

  SeededRng init_rng(derive_seed(cfg.seed, "init"));
  SeededRng noise_rng(derive_seed(cfg.seed, "augment"));
  const FittedFilter conv = precompute_propagation(ops, cfg.kernel, cfg.order(), cfg.backend);

  TrainResult r;
  r.params = init_params(cfg, init_rng);
  r.adam = AdamState::for_params(r.params);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ForwardCache cache = forward(r.params, ops, conv, x, cfg, &noise_rng);
    const double l = loss(x, cache.reconstruction());
    if (!std::isfinite(l)) {
      throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch), r.history);
    }
    r.history.push_back(l);
    const Params grads = backward(cache, x, cfg, r.params, ops, conv);
    adam_step(r.params, grads, r.adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  }
  r.embedding = encode(r.params, ops, conv, x, cfg).embedding;
  return r;
}

inline TrainResult train(const ModelConfig& cfg, const Graph& g, const Matrix& x) {
  return train(cfg, GraphOperators::build(g, cfg.backend == FilterBackend::exact), x);
}

// Column-wise pooling of node embeddings into one graph embedding.
inline std::vector<double> readout(const Matrix& h, Aggregation kind) {
  if (h.empty()) throw InputError("readout: empty embedding matrix");
  std::vector<double> out(h.row(0).begin(), h.row(0).end());
  for (std::size_t i = 1; i < h.rows(); ++i) {
    auto row = h.row(i);
    for (std::size_t j = 0; j < h.cols(); ++j) out[j] = kind == Aggregation::max ? std::max(out[j], row[j]) : out[j] + row[j];
  }
  if (kind == Aggregation::avg)
    for (double& v : out) v /= static_cast<double>(h.rows());
  return out;
}

}  // namespace wgdn
