// Command-line front end: parameter sweeps, expansion checks, the
// preparation-test simulator, and the verification suite. Artifacts are
// CSV (12 significant digits, '# config:' provenance line) or JSON.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "renstab/io.hpp"
#include "renstab/verify.hpp"

using nlohmann::json;
using namespace renstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitVerification = 3;

std::string default_out_dir() {
  const char* env = std::getenv("RENSTAB_OUT_DIR");
  return env && *env ? env : ".";
}

std::string resolve_out(const std::string& out, const std::string& fallback_name,
                        const std::string& format) {
  if (!out.empty()) return out;
  return (std::filesystem::path(default_out_dir()) / (fallback_name + "." + format)).string();
}

void emit_table(const Table& table, const std::string& path, const std::string& format,
                bool verbose) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open output file " + path);
  if (format == "csv") {
    write_csv(file, table);
  } else {
    json doc;
    doc["config"] = table.config_json.empty() ? json() : json::parse(table.config_json);
    doc["columns"] = table.columns;
    json rows = json::array();
    for (const auto& row : table.rows) {
      json jrow = json::array();
      for (const Cell& cell : row) {
        if (std::holds_alternative<long long>(cell))
          jrow.push_back(std::get<long long>(cell));
        else if (std::holds_alternative<double>(cell))
          jrow.push_back(std::get<double>(cell));
        else
          jrow.push_back(std::get<std::string>(cell));
      }
      rows.push_back(std::move(jrow));
    }
    doc["rows"] = std::move(rows);
    file << doc.dump(2) << "\n";
  }
  if (verbose) std::cout << "wrote " << table.rows.size() << " rows to " << path << "\n";
}

// Config file values become defaults; explicit flags override them because
// CLI11 parses after these assignments.
json load_config_or_empty(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream file(path);
  if (!file) throw CLI::ValidationError("--config", "cannot read " + path);
  json doc = json::parse(file, nullptr, true, true);
  if (!doc.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
  return doc;
}

template <typename T>
void from_config(const json& config, const char* key, T& value) {
  if (config.contains(key)) value = config.at(key).get<T>();
}

struct CommonOpts {
  std::string out;
  std::string format = "csv";
  std::string config_path;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out, "output file (default: $RENSTAB_OUT_DIR/<cmd>.<fmt>)");
  cmd->add_option("--format", opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--config", opts.config_path, "JSON config file; flags override its values");
  cmd->add_flag("-v,--verbose", opts.verbose, "print progress");
}

json params_json(int d, int n, const std::vector<double>& lambdas,
                 const std::vector<double>& ps) {
  json config;
  config["d"] = d;
  config["n"] = n;
  config["lambda"] = lambdas;
  config["p"] = ps;
  return config;
}

// --- subcommand payloads ----------------------------------------------------

int cmd_entropy(int d, int n, const std::vector<double>& lambdas, const std::vector<double>& ps,
                const std::string& kind, std::uint64_t seed, const CommonOpts& opts) {
  json config = params_json(d, n, lambdas, ps);
  config["kind"] = kind;
  config["seed"] = seed;

  const PureState psi = sample_state(
      kind == "haar" ? StateKind::haar : StateKind::random_product, d, n, seed);
  Table table;
  table.config_json = config.dump();
  table.columns = {"d", "n", "lambda", "p", "kind", "s_value", "s_min_closed", "excess"};
  for (double lambda : lambdas)
    for (double p : ps) {
      const DepolarizingParams params(lambda, d, n);
      const RenyiOrder order(p);
      const double s = renyi_entropy(apply_depolarizing(params, DensityMatrix::pure(psi)), order);
      const double s_min = min_output_renyi_closed(params, order);
      table.rows.push_back({static_cast<long long>(d), static_cast<long long>(n), lambda, p,
                            kind, s, s_min, s - s_min});
    }
  emit_table(table, resolve_out(opts.out, "entropy", opts.format), opts.format, opts.verbose);
  return kExitOk;
}

int cmd_min_entropy(int d, int n, const std::vector<double>& lambdas,
                    const std::vector<double>& ps, int restarts, int iters, std::uint64_t seed,
                    const CommonOpts& opts) {
  json config = params_json(d, n, lambdas, ps);
  config["restarts"] = restarts;
  config["iters"] = iters;
  config["seed"] = seed;

  Table table;
  table.config_json = config.dump();
  table.columns = {"d",           "n",           "lambda",   "p",
                   "s_min_closed", "s_min_numeric", "abs_diff", "argmin_product_fidelity"};
  for (double lambda : lambdas)
    for (double p : ps) {
      const DepolarizingParams params(lambda, d, n);
      const RenyiOrder order(p);
      const double closed = min_output_renyi_closed(params, order);
      const MinEntropyResult numeric =
          min_output_renyi_numeric(params, order, restarts, seed, iters);
      const double product_fid = max_product_fidelity(numeric.argmin, 8, seed).value;
      table.rows.push_back({static_cast<long long>(d), static_cast<long long>(n), lambda, p,
                            closed, numeric.value, std::abs(numeric.value - closed),
                            product_fid});
      if (opts.verbose)
        std::cout << "lambda=" << lambda << " p=" << p << " diff "
                  << format_sig(numeric.value - closed, 3) << "\n";
    }
  emit_table(table, resolve_out(opts.out, "min_entropy", opts.format), opts.format,
             opts.verbose);
  return kExitOk;
}

int cmd_taylor_check(int families, std::uint64_t seed, const CommonOpts& opts) {
  json config;
  config["families"] = families;
  config["seed"] = seed;

  const std::vector<double> t_grid = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  const std::vector<int> sides = {2, 3, 4, 5, 6, 8, 10, 12, 14, 16};
  const std::vector<double> orders = {2.0, 3.0, 5.0, 1.0, 2.5};

  Table table;
  table.config_json = config.dump();
  table.columns = {"family", "side", "p", "coeff", "fd_coeff", "rel_err", "slope", "exact"};
  Rng rng(seed);
  auto add_row = [&](const std::string& label, int side, double p,
                     const PerturbationFamily& family) {
    const RenyiOrder order(p);
    const double coeff = renyi_second_order_coeff(family, order);
    const double base = renyi_entropy(family.rho_diag, order);
    const double t = 1e-4;
    const double fd =
        (renyi_entropy(eig_hermitian(family.density_at(t)).eigenvalues, order) - base) / (t * t);
    const TaylorResidual residual = taylor_residual_check(family, order, t_grid);
    table.rows.push_back({label, static_cast<long long>(side), p, coeff, fd,
                          std::abs(fd - coeff) / std::max(std::abs(coeff), 1e-12),
                          residual.slope, static_cast<long long>(residual.exact)});
  };
  for (int i = 0; i < families; ++i) {
    const int side = sides[i % sides.size()];
    const double p = orders[i % orders.size()];
    add_row(std::to_string(i), side, p, verify_detail::random_family(side, rng));
  }
  const DepolarizingParams params(0.5, 2, 2);
  add_row("channel", 4, 2.0, stability_family(params, PureState::basis(2, 2, 3)));
  emit_table(table, resolve_out(opts.out, "taylor_check", opts.format), opts.format,
             opts.verbose);
  return kExitOk;
}

int cmd_fp_scan(int d, const std::vector<double>& lambdas, const std::vector<double>& ps,
                int x_min, int x_max, const std::string& variant, const CommonOpts& opts) {
  json config;
  config["d"] = d;
  config["lambda"] = lambdas;
  config["p"] = ps;
  config["x_min"] = x_min;
  config["x_max"] = x_max;
  config["variant"] = variant;

  Table table;
  table.config_json = config.dump();
  table.columns = {"d", "lambda", "p", "x"};
  const bool canonical = variant != "as-printed";
  const bool printed = variant != "canonical";
  if (canonical) table.columns.push_back("f_canonical");
  if (printed) table.columns.push_back("f_as_printed");
  table.columns.push_back("f_vn");

  for (double lambda : lambdas)
    for (double p : ps) {
      const DepolarizingParams params(lambda, d, 1);
      for (int x = x_min; x <= x_max; ++x) {
        std::vector<Cell> row = {static_cast<long long>(d), lambda, p,
                                 static_cast<long long>(x)};
        if (canonical) row.push_back(f_p(x, params, p, FpVariant::canonical));
        if (printed) row.push_back(f_p(x, params, p, FpVariant::as_printed));
        row.push_back(f_vn(x, params));
        table.rows.push_back(std::move(row));
      }
      const double worst = monotonicity_scan(params, p, std::max(x_max, 3));
      std::cout << "monotonicity d=" << d << " lambda=" << lambda << " p=" << p
                << ": worst increment " << format_sig(worst, 6)
                << (worst >= -1e-12 ? " (monotone)" : " (VIOLATION)") << "\n";
    }
  emit_table(table, resolve_out(opts.out, "fp_scan", opts.format), opts.format, opts.verbose);
  return kExitOk;
}

int cmd_gap(int d, const std::vector<double>& lambdas, const std::vector<double>& ps,
            bool h_scan, const CommonOpts& opts) {
  json config;
  config["d"] = d;
  config["lambda"] = lambdas;
  config["p"] = ps;
  config["h_scan"] = h_scan;

  Table table;
  table.config_json = config.dump();
  table.columns = {"d",    "lambda",     "r",  "p", "accept_coeff", "reject_coeff",
                   "gap",  "gap_limit"};
  for (double lambda : lambdas) {
    const DepolarizingParams params(lambda, d, 1);
    for (double p : ps)
      table.rows.push_back({static_cast<long long>(d), lambda, params.r(), p,
                            accept_coeff(params, p), reject_coeff(p), gap(p, params),
                            gap_limit(params)});
  }
  const std::string out = resolve_out(opts.out, "gap", opts.format);
  emit_table(table, out, opts.format, opts.verbose);

  if (h_scan) {
    Table h_table;
    h_table.config_json = config.dump();
    h_table.columns = {"d", "grid_min", "grid_argmin", "critical_point", "critical_value"};
    for (int dd = 2; dd <= std::max(d, 10); ++dd) {
      const HMinReport report = h_min_check(dd);
      h_table.rows.push_back(
          {static_cast<long long>(dd), report.grid_min, report.grid_argmin,
           report.critical_point ? Cell(*report.critical_point) : Cell(std::string("-")),
           report.critical_value ? Cell(*report.critical_value) : Cell(std::string("-"))});
    }
    const std::filesystem::path base(out);
    std::filesystem::path h_path = base.parent_path() / ("h_" + base.filename().string());
    emit_table(h_table, h_path.string(), opts.format, opts.verbose);
  }
  return kExitOk;
}

int cmd_polygraph(TrialConfig trial, const std::vector<double>& gap_report_ps,
                  const std::string& summary_path, const CommonOpts& opts) {
  json config;
  config["d"] = trial.params.d;
  config["n"] = trial.params.n;
  config["lambda"] = trial.params.lambda;
  config["p"] = trial.p;
  config["eps"] = trial.eps;
  config["honest"] = trial.honest;
  config["trials"] = trial.trials;
  config["seed"] = trial.seed;
  config["sigma"] = trial.noise_sigma;
  config["delta_max"] = trial.delta_max;
  if (trial.delta_lo) config["delta_lo"] = *trial.delta_lo;
  if (trial.delta_hi) config["delta_hi"] = *trial.delta_hi;
  config["allow_weight_one"] = trial.allow_weight_one;

  if (!gap_report_ps.empty()) {
    const std::vector<GapRow> rows = gap_width_report(trial, gap_report_ps);
    Table table;
    config["gap_report_p"] = gap_report_ps;
    table.config_json = config.dump();
    table.columns = {"p", "accept_coeff", "reject_coeff", "gap", "undecided_rate"};
    for (const GapRow& row : rows)
      table.rows.push_back({row.p, row.accept_coefficient, row.reject_coefficient,
                            row.gap_width, row.undecided_rate});
    emit_table(table, resolve_out(opts.out, "gap_width", opts.format), opts.format,
               opts.verbose);
    return kExitOk;
  }

  const ProtocolResult result = run_protocol(trial);
  Table table = verify_detail::records_table(result);
  table.config_json = config.dump();
  emit_table(table, resolve_out(opts.out, "polygraph", opts.format), opts.format, opts.verbose);

  json summary;
  summary["accepts"] = result.summary.accepts;
  summary["undecided"] = result.summary.undecided;
  summary["rejects"] = result.summary.rejects;
  summary["false_accepts"] = result.summary.false_accepts;
  summary["false_rejects"] = result.summary.false_rejects;
  summary["accept_coeff"] = result.thresholds.accept_coefficient;
  if (result.thresholds.reject_coefficient)
    summary["reject_coeff"] = *result.thresholds.reject_coefficient;
  summary["s_min"] = result.s_min;
  std::cout << summary.dump(2) << "\n";
  if (!summary_path.empty()) {
    std::ofstream file(summary_path);
    file << summary.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_verify(int criterion, bool skip_module_checks, const CommonOpts&) {
  std::vector<CheckResult> results;
  if (criterion > 0) {
    results = acceptance_criterion(criterion);
  } else {
    results = run_verification(!skip_module_checks);
  }
  int failures = 0;
  for (const CheckResult& r : results) {
    std::cout << (r.passed ? "[PASS] " : (r.blocking ? "[FAIL] " : "[INFO] ")) << r.name;
    if (!r.detail.empty()) std::cout << " -- " << r.detail;
    std::cout << "\n";
    if (r.blocking && !r.passed) ++failures;
  }
  std::cout << (failures ? "FAILED" : "OK") << " (" << results.size() << " checks, " << failures
            << " blocking failure" << (failures == 1 ? "" : "s") << ")\n";
  return failures ? kExitVerification : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"renstab: depolarizing-channel output-entropy stability laboratory"};
  app.require_subcommand(1);

  // Pre-scan for --config so file values become defaults under every flag.
  json file_config = json::object();
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") file_config = load_config_or_empty(argv[i + 1]);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return kExitUsage;
  }

  int d = 2, n = 2;
  std::vector<double> lambdas = {0.5};
  std::vector<double> ps = {2.0};
  std::uint64_t seed = 1;
  from_config(file_config, "d", d);
  from_config(file_config, "n", n);
  from_config(file_config, "lambda", lambdas);
  from_config(file_config, "p", ps);
  from_config(file_config, "seed", seed);

  CommonOpts entropy_opts;
  std::string entropy_kind = "product";
  CLI::App* entropy_cmd = app.add_subcommand("entropy", "output entropy of a sampled state");
  entropy_cmd->add_option("--d", d, "local dimension");
  entropy_cmd->add_option("--n", n, "site count");
  entropy_cmd->add_option("--lambda", lambdas, "channel parameter grid")->delimiter(',');
  entropy_cmd->add_option("--p", ps, "Renyi order grid")->delimiter(',');
  entropy_cmd->add_option("--kind", entropy_kind, "state kind")
      ->check(CLI::IsMember({"product", "haar"}));
  entropy_cmd->add_option("--seed", seed, "sampling seed");
  add_common(entropy_cmd, entropy_opts);

  CommonOpts min_opts;
  int restarts = 12, iters = 1500;
  from_config(file_config, "restarts", restarts);
  from_config(file_config, "iters", iters);
  CLI::App* min_cmd =
      app.add_subcommand("min-entropy", "closed-form vs numeric minimal output entropy");
  min_cmd->add_option("--d", d, "local dimension");
  min_cmd->add_option("--n", n, "site count");
  min_cmd->add_option("--lambda", lambdas, "channel parameter grid")->delimiter(',');
  min_cmd->add_option("--p", ps, "Renyi order grid")->delimiter(',');
  min_cmd->add_option("--restarts", restarts, "optimizer restarts");
  min_cmd->add_option("--iters", iters, "optimizer iterations per restart");
  min_cmd->add_option("--seed", seed, "optimizer seed");
  add_common(min_cmd, min_opts);

  CommonOpts taylor_opts;
  int families = 21;
  from_config(file_config, "families", families);
  CLI::App* taylor_cmd =
      app.add_subcommand("taylor-check", "second-order expansion residual slopes");
  taylor_cmd->add_option("--families", families, "number of random families");
  taylor_cmd->add_option("--seed", seed, "family generator seed");
  add_common(taylor_cmd, taylor_opts);

  CommonOpts fp_opts;
  int x_min = 0, x_max = 10;
  std::string variant = "both";
  from_config(file_config, "x_min", x_min);
  from_config(file_config, "x_max", x_max);
  from_config(file_config, "variant", variant);
  CLI::App* fp_cmd = app.add_subcommand("fp-scan", "bound-function tables and monotonicity");
  fp_cmd->add_option("--d", d, "local dimension");
  fp_cmd->add_option("--lambda", lambdas, "channel parameter grid")->delimiter(',');
  fp_cmd->add_option("--p", ps, "Renyi order grid (> 1)")->delimiter(',');
  fp_cmd->add_option("--x-min", x_min, "first x");
  fp_cmd->add_option("--x-max", x_max, "last x");
  fp_cmd->add_option("--variant", variant, "canonical, as-printed, or both")
      ->check(CLI::IsMember({"canonical", "as-printed", "both"}));
  add_common(fp_cmd, fp_opts);

  CommonOpts gap_opts;
  bool h_scan = false;
  CLI::App* gap_cmd = app.add_subcommand("gap", "undecided-band width and h-polynomial tables");
  gap_cmd->add_option("--d", d, "local dimension");
  gap_cmd->add_option("--lambda", lambdas, "channel parameter grid")->delimiter(',');
  gap_cmd->add_option("--p", ps, "Renyi order grid (>= 2)")->delimiter(',');
  gap_cmd->add_flag("--h-scan", h_scan, "also emit the h-polynomial minimum table");
  add_common(gap_cmd, gap_opts);

  CommonOpts poly_opts;
  TrialConfig trial;
  bool cheating = false;
  double delta_lo = -1.0, delta_hi = -1.0;
  std::vector<double> gap_report_ps;
  std::string summary_path;
  bool serial = false;
  from_config(file_config, "eps", trial.eps);
  from_config(file_config, "trials", trial.trials);
  from_config(file_config, "sigma", trial.noise_sigma);
  from_config(file_config, "delta_max", trial.delta_max);
  from_config(file_config, "cheating", cheating);
  CLI::App* poly_cmd = app.add_subcommand("polygraph", "batch preparation-test simulation");
  poly_cmd->add_option("--d", d, "local dimension");
  poly_cmd->add_option("--n", n, "site count");
  poly_cmd->add_option("--lambda", lambdas, "channel parameter (first value used)")
      ->delimiter(',');
  poly_cmd->add_option("--p", ps, "Renyi order (first value used)")->delimiter(',');
  poly_cmd->add_option("--eps", trial.eps, "Bob's announced bound");
  poly_cmd->add_flag("--cheating", cheating, "draw delta above eps instead of below");
  poly_cmd->add_option("--delta-lo", delta_lo, "explicit sampler lower bound");
  poly_cmd->add_option("--delta-hi", delta_hi, "explicit sampler upper bound");
  poly_cmd->add_option("--delta-max", trial.delta_max, "cheating default upper bound");
  poly_cmd->add_flag("--allow-weight-one", trial.allow_weight_one,
                     "permit weight-1 directions (outside the theory)");
  poly_cmd->add_option("--trials", trial.trials, "trial count");
  poly_cmd->add_option("--seed", seed, "trial seed");
  poly_cmd->add_option("--sigma", trial.noise_sigma, "entropy estimator noise");
  poly_cmd->add_option("--fidelity-restarts", trial.fidelity_restarts,
                       "restarts for the per-trial product-fidelity bound");
  poly_cmd->add_flag("--serial", serial, "disable the worker pool");
  poly_cmd->add_option("--gap-report", gap_report_ps,
                       "emit the gap-width table for these p instead of trials")
      ->delimiter(',');
  poly_cmd->add_option("--summary", summary_path, "also write the JSON summary here");
  add_common(poly_cmd, poly_opts);

  CommonOpts verify_opts;
  int criterion = 0;
  bool skip_module_checks = false;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the verification suite");
  verify_cmd->add_option("--criterion", criterion, "run a single criterion (1-9)")
      ->check(CLI::Range(1, 9));
  verify_cmd->add_flag("--criteria-only", skip_module_checks,
                       "skip the module property checks");
  add_common(verify_cmd, verify_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (entropy_cmd->parsed())
      return cmd_entropy(d, n, lambdas, ps, entropy_kind, seed, entropy_opts);
    if (min_cmd->parsed())
      return cmd_min_entropy(d, n, lambdas, ps, restarts, iters, seed, min_opts);
    if (taylor_cmd->parsed()) return cmd_taylor_check(families, seed, taylor_opts);
    if (fp_cmd->parsed()) return cmd_fp_scan(d, lambdas, ps, x_min, x_max, variant, fp_opts);
    if (gap_cmd->parsed()) return cmd_gap(d, lambdas, ps, h_scan, gap_opts);
    if (poly_cmd->parsed()) {
      trial.params = DepolarizingParams(lambdas.front(), d, n);
      trial.p = ps.front();
      trial.honest = !cheating;
      trial.seed = seed;
      trial.parallel = !serial;
      if (delta_lo >= 0.0) trial.delta_lo = delta_lo;
      if (delta_hi >= 0.0) trial.delta_hi = delta_hi;
      return cmd_polygraph(trial, gap_report_ps, summary_path, poly_opts);
    }
    if (verify_cmd->parsed()) return cmd_verify(criterion, skip_module_checks, verify_opts);
  } catch (const std::domain_error& e) {
    std::cerr << "precondition violation: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition violation: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
