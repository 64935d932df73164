#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgdn/autoencoder.hpp"
#include "wgdn/datasets.hpp"
#include "wgdn/errors.hpp"
#include "wgdn/eval.hpp"
#include "wgdn/io.hpp"
#include "wgdn/probe.hpp"

namespace wgdn {

using Json = nlohmann::json;

// Malformed or schema-violating configuration documents.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

namespace detail {

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw SchemaError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw SchemaError(where_ + "." + key + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw SchemaError(where_ + ": unknown key '" + key + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto parse_enum(ObjectReader& r, const char* key, Parse parse, decltype(parse("")) fallback) {
  std::string s;
  r.get(key, s);
  if (s.empty()) return fallback;
  try {
    return parse(s);
  } catch (const InputError& e) {
    throw SchemaError(r.path(key) + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model configuration

inline KernelSpec kernel_from_json(const Json& j, const std::string& where = "kernel") {
  KernelSpec k;
  if (j.is_string()) {
    k.kind = parse_kernel(j.get<std::string>());
    return k;
  }
  detail::ObjectReader r(j, where);
  k.kind = detail::parse_enum(r, "kind", parse_kernel, k.kind);
  r.get("t", k.t);
  r.get("alpha", k.alpha);
  r.finish();
  return k;
}

inline Json to_json(const KernelSpec& k) {
  return Json{{"kind", std::string(to_string(k.kind))}, {"t", k.t}, {"alpha", k.alpha}};
}

inline ModelConfig model_config_from_json(const Json& j, ModelConfig cfg = {}, const std::string& where = "model") {
  detail::ObjectReader r(j, where);
  r.get("num_layers", cfg.num_layers);
  r.get("input_dim", cfg.input_dim);
  r.get("hidden_dim", cfg.hidden_dim);
  if (const Json* k = r.child("kernel")) cfg.kernel = kernel_from_json(*k, where + ".kernel");
  r.get("gammas", cfg.gammas);
  r.get("beta", cfg.beta);
  r.get("remez_order", cfg.remez_order);
  cfg.agg = detail::parse_enum(r, "agg", parse_aggregation, cfg.agg);
  r.get("last_activation", cfg.last_activation);
  r.get("skip_connection", cfg.skip_connection);
  cfg.decoder_mode = detail::parse_enum(r, "decoder_mode", parse_decoder_mode, cfg.decoder_mode);
  r.get("augment", cfg.augment);
  cfg.backend = detail::parse_enum(r, "backend", parse_backend, cfg.backend);
  r.get("inverse_clamp", cfg.inverse_clamp);
  r.get("seed", cfg.seed);
  r.get("lr", cfg.lr);
  r.get("adam_beta1", cfg.adam_beta1);
  r.get("adam_beta2", cfg.adam_beta2);
  r.get("adam_eps", cfg.adam_eps);
  r.get("epochs", cfg.epochs);
  r.finish();
  return cfg;
}

inline Json to_json(const ModelConfig& c) {
  return Json{{"num_layers", c.num_layers},
              {"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"kernel", to_json(c.kernel)},
              {"gammas", c.gammas},
              {"beta", c.beta},
              {"remez_order", c.remez_order},
              {"agg", std::string(to_string(c.agg))},
              {"last_activation", c.last_activation},
              {"skip_connection", c.skip_connection},
              {"decoder_mode", std::string(to_string(c.decoder_mode))},
              {"augment", c.augment},
              {"backend", std::string(to_string(c.backend))},
              {"inverse_clamp", c.inverse_clamp},
              {"seed", c.seed},
              {"lr", c.lr},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"epochs", c.epochs}};
}

// ---------------------------------------------------------------------------
// Dataset source: {"type": "karate" | "sbm" | "files", ...}

struct DatasetSource {
  enum class Kind { karate, sbm, files };
  Kind kind = Kind::karate;
  SyntheticSpec sbm{};
  std::size_t feature_dim = 8;  // karate
  double feature_signal = 1.0;  // karate
  std::filesystem::path edges, features, labels;
  std::size_t num_nodes = 0;  // files; 0 takes the feature row count
};

inline DatasetSource dataset_from_json(const Json& j, const std::filesystem::path& base = {}) {
  detail::ObjectReader r(j, "dataset");
  DatasetSource d;
  std::string type = "karate";
  r.get("type", type);
  if (type == "karate") {
    d.kind = DatasetSource::Kind::karate;
    r.get("feature_dim", d.feature_dim);
    r.get("feature_signal", d.feature_signal);
  } else if (type == "sbm") {
    d.kind = DatasetSource::Kind::sbm;
    r.get("block_sizes", d.sbm.block_sizes);
    r.get("p_in", d.sbm.p_in);
    r.get("p_out", d.sbm.p_out);
    r.get("feature_dim", d.sbm.feature_dim);
    r.get("feature_signal", d.sbm.feature_signal);
  } else if (type == "files") {
    d.kind = DatasetSource::Kind::files;
    std::string e, f, l;
    r.get("edges", e);
    r.get("features", f);
    r.get("labels", l);
    r.get("num_nodes", d.num_nodes);
    if (e.empty() || f.empty()) throw SchemaError("dataset: 'files' needs 'edges' and 'features'");
    auto resolve = [&](const std::string& p) { return p.empty() ? std::filesystem::path{} : base / p; };
    d.edges = resolve(e);
    d.features = resolve(f);
    d.labels = resolve(l);
  } else {
    throw SchemaError("dataset.type: unknown source '" + type + "' (expected karate, sbm or files)");
  }
  r.finish();
  return d;
}

inline Dataset load_dataset(const DatasetSource& d, std::uint64_t seed) {
  switch (d.kind) {
    case DatasetSource::Kind::karate: return make_karate_dataset(d.feature_dim, d.feature_signal, seed);
    case DatasetSource::Kind::sbm: return make_sbm_dataset(d.sbm, seed);
    case DatasetSource::Kind::files: break;
  }
  Matrix x = io::read_matrix_csv(d.features);
  Graph g = io::read_graph(d.edges, d.num_nodes == 0 ? x.rows() : d.num_nodes);
  if (g.num_nodes() != x.rows()) throw ShapeError("dataset: feature rows do not match the node count");
  std::vector<int> labels;
  if (!d.labels.empty()) {
    labels = io::read_labels(d.labels);
    if (labels.size() != x.rows()) throw ShapeError("dataset: label count does not match the node count");
  }
  return {std::move(g), std::move(x), std::move(labels)};
}

// ---------------------------------------------------------------------------
// Run configuration shared by every command

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  DatasetSource dataset{};
  ModelConfig model{};
  ProbeOptions probe{};
  std::vector<double> betas{0.0, 0.5, 1.0};
  std::vector<DecoderMode> modes{DecoderMode::wiener, DecoderMode::inverse};
  std::size_t final_window = 10;
  VerifyOptions verify{};
};

inline ProbeOptions probe_from_json(const Json& j, ProbeOptions p = {}) {
  detail::ObjectReader r(j, "probe");
  r.get("train_fraction", p.train_fraction);
  r.get("val_fraction", p.val_fraction);
  r.get("epochs", p.epochs);
  r.get("lr", p.lr);
  r.finish();
  return p;
}

inline VerifyOptions verify_from_json(const Json& j, VerifyOptions v = {}) {
  detail::ObjectReader r(j, "verify");
  r.get("prop2_instances", v.prop2_instances);
  r.get("prop3_instances", v.prop3_instances);
  r.get("remez_graphs", v.remez_graphs);
  r.get("graph_nodes", v.graph_nodes);
  r.get("gamma1", v.gamma1);
  r.get("gamma2", v.gamma2);
  r.get("mc_sigma", v.mc_sigma);
  r.get("mc_trials", v.mc_trials);
  r.get("mc_tolerance", v.mc_tolerance);
  r.get("tolerance", v.tolerance);
  r.finish();
  return v;
}

/// Parses and validates a run configuration. Relative dataset paths resolve
/// against `base` (normally the config file's directory).
inline RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base = {}) {
  detail::ObjectReader r(j, "config");
  RunConfig c;
  r.get("seed", c.seed);
  std::string out;
  r.get("out", out);
  if (!out.empty()) c.out = out;
  if (const Json* d = r.child("dataset")) c.dataset = dataset_from_json(*d, base);
  if (const Json* m = r.child("model")) c.model = model_config_from_json(*m);
  if (const Json* p = r.child("probe")) c.probe = probe_from_json(*p);
  if (const Json* v = r.child("verify")) c.verify = verify_from_json(*v);
  if (const Json* s = r.child("sweep")) {
    detail::ObjectReader sr(*s, "sweep");
    sr.get("betas", c.betas);
    std::vector<std::string> modes;
    sr.get("modes", modes);
    if (!modes.empty()) {
      c.modes.clear();
      for (const auto& m : modes) {
        try {
          c.modes.push_back(parse_decoder_mode(m));
        } catch (const InputError& e) {
          throw SchemaError(std::string("sweep.modes: ") + e.what());
        }
      }
    }
    sr.get("final_window", c.final_window);
    sr.finish();
  }
  r.finish();

  if (c.betas.empty()) throw SchemaError("sweep.betas: at least one value required");
  for (double b : c.betas)
    if (!(b >= 0.0)) throw SchemaError("sweep.betas: values must be non-negative");
  if (!(c.verify.tolerance >= 0.0)) throw SchemaError("verify.tolerance: must be non-negative");
  c.model.seed = c.seed;
  c.probe.seed = c.seed;
  c.verify.seed = c.seed;
  return c;
}

inline Json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": malformed JSON: " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_json_file(path), path.parent_path());
}

// Applies the `--seed` override to every seeded component.
inline void override_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.model.seed = seed;
  c.probe.seed = seed;
  c.verify.seed = seed;
}

// ---------------------------------------------------------------------------
// Checkpoints: {config, weights, prelu slopes, adam (optional)}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw SchemaError(where + ": ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw SchemaError(where + ": non-numeric entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

inline Json weights_to_json(const Params& p) {
  Json dec = Json::array();
  for (const auto& layer : p.decoder) {
    Json channels = Json::array();
    for (const auto& w : layer) channels.push_back(to_json(w));
    dec.push_back(channels);
  }
  Json enc = Json::array();
  for (const auto& w : p.encoder) enc.push_back(to_json(w));
  return Json{{"encoder", enc}, {"decoder", dec}};
}

inline Json slopes_to_json(const Params& p) {
  return Json{{"encoder", p.encoder_slopes}, {"decoder", p.decoder_slopes}};
}

inline Params params_from_json(const Json& weights, const Json& slopes) {
  Params p;
  try {
    for (std::size_t i = 0; i < weights.at("encoder").size(); ++i)
      p.encoder.push_back(matrix_from_json(weights["encoder"][i], "weights.encoder"));
    for (const auto& layer : weights.at("decoder")) {
      std::vector<Matrix> channels;
      for (const auto& w : layer) channels.push_back(matrix_from_json(w, "weights.decoder"));
      p.decoder.push_back(std::move(channels));
    }
    p.encoder_slopes = slopes.at("encoder").get<std::vector<double>>();
    p.decoder_slopes = slopes.at("decoder").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

inline Json checkpoint_to_json(const ModelConfig& cfg, const Params& p, const AdamState* adam = nullptr) {
  Json j{{"config", to_json(cfg)}, {"weights", weights_to_json(p)}, {"prelu_slopes", slopes_to_json(p)}};
  if (adam) {
    j["adam"] = Json{{"step", adam->step},
                     {"first", {{"weights", weights_to_json(adam->first)}, {"prelu_slopes", slopes_to_json(adam->first)}}},
                     {"second", {{"weights", weights_to_json(adam->second)}, {"prelu_slopes", slopes_to_json(adam->second)}}}};
  }
  return j;
}

struct Checkpoint {
  ModelConfig config;
  Params params;
  std::optional<AdamState> adam;
};

inline Checkpoint checkpoint_from_json(const Json& j) {
  detail::ObjectReader r(j, "checkpoint");
  Checkpoint c;
  const Json* cfg = r.child("config");
  const Json* w = r.child("weights");
  const Json* s = r.child("prelu_slopes");
  const Json* a = r.child("adam");
  r.finish();
  if (!cfg || !w || !s) throw SchemaError("checkpoint: needs config, weights and prelu_slopes");
  c.config = model_config_from_json(*cfg, {}, "checkpoint.config");
  c.params = params_from_json(*w, *s);
  if (a) {
    AdamState st;
    try {
      st.step = a->at("step").get<std::uint64_t>();
      st.first = params_from_json(a->at("first").at("weights"), a->at("first").at("prelu_slopes"));
      st.second = params_from_json(a->at("second").at("weights"), a->at("second").at("prelu_slopes"));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("checkpoint.adam: ") + e.what());
    }
    c.adam = std::move(st);
  }
  return c;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = io::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace wgdn
