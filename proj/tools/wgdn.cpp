// Command-line front end: train, verify, remez-fit, sweep, probe.
//
// Exit codes: 0 success, 1 check failure or numerical breakdown,
// 2 usage, I/O or schema error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wgdn/autoencoder.hpp"
#include "wgdn/config.hpp"
#include "wgdn/eval.hpp"
#include "wgdn/io.hpp"
#include "wgdn/probe.hpp"
#include "wgdn/remez.hpp"

namespace fs = std::filesystem;
using namespace wgdn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "JSON run configuration");
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "seed override");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? run_config_from_json(Json::object()) : load_run_config(f.config);
  if (f.seed) override_seed(c, *f.seed);
  if (!f.out.empty()) c.out = f.out;
  return c;
}

int cmd_train(const CommonFlags& flags) {
  const RunConfig rc = resolve(flags);
  const Dataset data = load_dataset(rc.dataset, rc.seed);
  const ModelConfig cfg = resolve_config(rc.model, data.features);
  const TrainResult tr = train(cfg, data.graph, data.features);

  write_json(rc.out / "checkpoint.json", checkpoint_to_json(cfg, tr.params, &tr.adam));
  io::write_matrix_csv(rc.out / "embeddings.csv", tr.embedding);
  if (!data.labels.empty()) io::write_labels(rc.out / "labels.txt", data.labels);
  auto hist = io::open_output(rc.out / "loss_history.csv");
  hist << "epoch,loss\n";
  for (std::size_t e = 0; e < tr.history.size(); ++e) hist << e + 1 << ',' << io::format_double(tr.history[e]) << '\n';

  std::cout << "final loss " << io::format_double(tr.history.empty() ? 0.0 : tr.history.back()) << '\n';
  return kExitOk;
}

int cmd_verify(const CommonFlags& flags, std::optional<double> tolerance) {
  RunConfig rc = resolve(flags);
  if (tolerance) rc.verify.tolerance = *tolerance;
  const auto rows = run_verification(rc.verify);

  auto out = io::open_output(rc.out / "verify_report.csv");
  out << "check,case,detail,lhs,rhs,status\n";
  std::size_t pass = 0, fail = 0, skip = 0;
  for (const auto& r : rows) {
    out << r.check << ',' << r.case_id << ',' << r.detail << ',' << io::format_double(r.lhs) << ','
        << io::format_double(r.rhs) << ',' << to_string(r.status) << '\n';
    switch (r.status) {
      case CheckStatus::pass: ++pass; break;
      case CheckStatus::fail:
        ++fail;
        std::cerr << "FAIL " << r.check << ' ' << r.case_id << ": " << r.detail << '\n';
        break;
      case CheckStatus::skip: ++skip; break;
    }
  }
  std::cout << pass << " passed, " << fail << " failed, " << skip << " skipped\n";
  return fail == 0 ? kExitOk : kExitFailed;
}

struct RemezFlags {
  std::string kernel = "heat";
  std::size_t order = 2;
  std::optional<double> gamma, sigma2, energy;
  double t = 1.0, alpha = 0.2;
  std::size_t grid = 1001;
  std::string nodes = "extrema";
  std::string out = "out";
};

int cmd_remez(const RemezFlags& f) {
  KernelSpec k{parse_kernel(f.kernel), f.t, f.alpha};
  k.validate();
  if (f.grid < 2) throw InputError("--grid must be at least 2");
  const bool wiener = f.sigma2.has_value();
  if (!wiener && (f.gamma || f.energy)) throw InputError("--gamma/--energy need --sigma2 (Wiener target)");
  const WienerSpec w{k, f.sigma2.value_or(0.0), f.energy.value_or(1.0), f.gamma.value_or(1.0)};
  const auto target = [&](double lam) { return wiener ? eval_wiener(w, lam) : eval_conv(k, lam); };

  const auto p = remez_fit(target, f.order, 0.0, 2.0, parse_node_kind(f.nodes));
  const double grid_err = max_grid_error(target, p, f.grid);
  const fs::path dir = f.out;

  auto coeffs = io::open_output(dir / "remez_coefficients.csv");
  coeffs << "power,coefficient\n";
  for (std::size_t i = 0; i < p.coeffs.size(); ++i) coeffs << i << ',' << io::format_double(p.coeffs[i]) << '\n';

  auto grid = io::open_output(dir / "remez_grid.csv");
  grid << "lambda,target,approximation,error\n";
  for (std::size_t i = 0; i < f.grid; ++i) {
    const double t = 2.0 * static_cast<double>(i) / static_cast<double>(f.grid - 1);
    const double y = target(t), a = poly_eval(p, t);
    grid << io::format_double(t) << ',' << io::format_double(y) << ',' << io::format_double(a) << ','
         << io::format_double(y - a) << '\n';
  }

  auto summary = io::open_output(dir / "remez_summary.csv");
  summary << "kernel,target,order,nodes,leveled_error,max_grid_error\n";
  summary << to_string(k.kind) << ',' << (wiener ? "wiener" : "conv") << ',' << f.order << ',' << f.nodes << ','
          << io::format_double(p.leveled_error) << ',' << io::format_double(grid_err) << '\n';

  std::cout << "leveled error " << io::format_double(p.leveled_error) << ", max grid error "
            << io::format_double(grid_err) << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  const RunConfig rc = resolve(flags);
  const Dataset data = load_dataset(rc.dataset, rc.seed);
  const auto ops = GraphOperators::build(data.graph);
  SweepOptions so;
  so.final_window = rc.final_window;
  so.probe = rc.probe;
  const auto rows = stability_sweep(rc.model, rc.betas, rc.modes, ops, data.features, data.labels, so);

  auto out = io::open_output(rc.out / "sweep.csv");
  out << "beta,mode,augment,seed,initial_loss,final_loss,probe_accuracy\n";
  for (const auto& r : rows) {
    out << io::format_double(r.beta) << ',' << to_string(r.mode) << ',' << (r.augment ? 1 : 0) << ',' << r.seed << ','
        << io::format_double(r.initial_loss) << ',' << io::format_double(r.final_loss) << ','
        << io::format_double(r.probe_accuracy) << '\n';
  }
  std::cout << rows.size() << " sweep rows written\n";
  return kExitOk;
}

struct ProbeFlags {
  std::string embeddings, labels;
  std::uint64_t seed = 0;
  ProbeOptions opt{};
};

int cmd_probe(ProbeFlags f) {
  const Matrix h = io::read_matrix_csv(f.embeddings);
  const auto labels = io::read_labels(f.labels);
  f.opt.seed = f.seed;
  const auto r = logistic_probe(h, labels, f.opt);
  std::cout << "accuracy " << io::format_double(r.accuracy) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph spectral deconvolution toolkit"};
  app.require_subcommand(1);

  CommonFlags train_flags, verify_flags, sweep_flags;
  std::optional<double> tolerance;
  RemezFlags remez;
  ProbeFlags probe;

  auto* train_cmd = app.add_subcommand("train", "train an autoencoder and export embeddings");
  add_common(train_cmd, train_flags, true);

  auto* verify_cmd = app.add_subcommand("verify", "run the filter property checks");
  add_common(verify_cmd, verify_flags, false);
  verify_cmd->add_option("--tolerance", tolerance, "relative tolerance of the polynomial-vs-exact check");

  auto* remez_cmd = app.add_subcommand("remez-fit", "fit a polynomial to a kernel or Wiener filter");
  remez_cmd->add_option("--kernel", remez.kernel, "gcn, heat or ppr")->capture_default_str();
  remez_cmd->add_option("--order,-K", remez.order, "polynomial degree (at most 16)")->capture_default_str();
  remez_cmd->add_option("--gamma", remez.gamma, "Wiener energy scale");
  remez_cmd->add_option("--sigma2", remez.sigma2, "augmentation variance; selects the Wiener target");
  remez_cmd->add_option("--energy", remez.energy, "average spectral energy");
  remez_cmd->add_option("--t", remez.t, "heat diffusion time")->capture_default_str();
  remez_cmd->add_option("--alpha", remez.alpha, "ppr teleport probability")->capture_default_str();
  remez_cmd->add_option("--grid", remez.grid, "number of grid points on [0, 2]")->capture_default_str();
  remez_cmd->add_option("--nodes", remez.nodes, "reference set: extrema or roots")->capture_default_str();
  remez_cmd->add_option("--out", remez.out, "output directory")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "augmentation-strength sweep over decoder modes");
  add_common(sweep_cmd, sweep_flags, true);

  auto* probe_cmd = app.add_subcommand("probe", "linear probe accuracy of saved embeddings");
  probe_cmd->add_option("--embeddings", probe.embeddings, "embedding CSV")->required();
  probe_cmd->add_option("--labels", probe.labels, "label file, one integer per line")->required();
  probe_cmd->add_option("--seed", probe.seed, "split and init seed")->capture_default_str();
  probe_cmd->add_option("--train", probe.opt.train_fraction, "train fraction")->capture_default_str();
  probe_cmd->add_option("--val", probe.opt.val_fraction, "validation fraction")->capture_default_str();
  probe_cmd->add_option("--epochs", probe.opt.epochs, "training epochs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags);
    if (*verify_cmd) return cmd_verify(verify_flags, tolerance);
    if (*remez_cmd) return cmd_remez(remez);
    if (*sweep_cmd) return cmd_sweep(sweep_flags);
    if (*probe_cmd) return cmd_probe(probe);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitUsage;
}
