#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "klsure/analysis.hpp"
#include "klsure/errors.hpp"
#include "klsure/estimators.hpp"
#include "klsure/io.hpp"
#include "klsure/optim.hpp"
#include "klsure/risk.hpp"
#include "klsure/rng.hpp"
#include "klsure/simulate.hpp"

namespace klsure::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kSchemaVersion = "1";

struct Options {
  std::string command;
  std::string out;
  std::uint64_t seed = 0;

  // simulate
  std::string scenario = "case1";
  long long m = 50;
  long long k = 50;
  double n0 = 10.0;
  long long rank = 20;
  double amplitude = 5.0;

  // fit / risk-curve / analyze
  std::string model;
  std::string counts;
  std::string truth;
  std::string totals;
  std::string composition;
  std::optional<double> lambda;
  std::string grid;
  std::size_t iters = 100;
  std::optional<int> order;
  std::size_t probes = 1;
  bool exact = false;
  std::optional<std::size_t> cv;
  std::size_t cv_splits = 20;
  std::string estimator = "lowrank";
  std::optional<double> w;
  double eps = 0.5;
  std::optional<double> z;
  std::size_t top = 10;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
};

// Files produced by a command, written only after every computation succeeded.
using FileSet = std::map<std::string, std::string>;

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? first : text.find(':', first + 1);
  if (second == std::string::npos) throw ConfigError("--grid expects LO:HI:N");
  const std::string lo = text.substr(0, first);
  const std::string hi = text.substr(first + 1, second - first - 1);
  const std::string n = text.substr(second + 1);
  try {
    std::size_t used = 0;
    g.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    g.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
  } catch (const std::exception&) {
    throw ConfigError("--grid bounds must be numbers: " + text);
  }
  const auto [end, ec] = std::from_chars(n.data(), n.data() + n.size(), g.n);
  if (ec != std::errc() || end != n.data() + n.size() || g.n == 0) {
    throw ConfigError("--grid size must be a positive integer: " + text);
  }
  return g;
}

json manifest(const Options& o, json config) {
  json j;
  j["command"] = o.command;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = KLSURE_VERSION;
  j["rng"] = std::string(kRngName);
  j["seed"] = o.seed;
  j["config"] = std::move(config);
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ModelKind require_model(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required");
  return parse_model_kind(o.model);
}

void require_path(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
}

// ---- simulate ----

FileSet cmd_simulate(const Options& o) {
  SimSpec spec;
  if (o.scenario == "case1") {
    spec.scenario = Case1{};
  } else if (o.scenario == "case2") {
    spec.scenario = Case2{o.rank};
  } else if (o.scenario == "poisson-sinusoid") {
    spec.scenario = PoissonSinusoid{o.amplitude};
  } else {
    throw ConfigError("unknown scenario '" + o.scenario + "'");
  }
  spec.m = o.m;
  spec.k = o.k;
  spec.n0 = o.n0;
  spec.seed = o.seed;
  validate(spec);

  const Simulation sim = simulate(spec);
  const Vector totals = sim.row_totals ? *sim.row_totals : Vector(sim.counts.row_totals());
  FileSet files;
  files["truth.csv"] = matrix_to_csv(sim.truth);
  files["counts.csv"] = counts_to_csv(sim.counts);
  files["totals.csv"] = vector_to_csv(totals);
  files["manifest.json"] = dump(manifest(o, to_json(spec)));
  std::cout << "simulated " << scenario_name(spec.scenario) << " " << spec.m << "x" << spec.k << "\n";
  return files;
}

// ---- fit ----

FileSet cmd_fit(const Options& o) {
  const ModelKind model = require_model(o);
  require_path(o.counts, "--counts");
  if (!o.lambda) throw ConfigError("--lambda is required");
  FistaConfig config;
  config.lambda = *o.lambda;
  config.max_iters = o.iters;
  config.record_objective = true;
  if (config.max_iters < 1) throw ConfigError("--iters must be at least 1");
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) throw ConfigError("--lambda must be finite and >= 0");

  const CountMatrix y = read_counts_csv(o.counts);
  const FitResult fit = fista_solve(model, y, config);
  const Matrix fitted = link_forward(model, fit.z_hat);

  json report;
  report["model"] = std::string(to_string(model));
  report["lambda"] = config.lambda;
  report["iterations"] = config.max_iters;
  report["step"] = fit.step;
  report["effective_rank"] = fit.effective_rank;
  report["objective_trace"] = fit.objective_trace;
  auto warnings = json::array();
  if (fit.iterate_bound_violated) warnings.push_back("iterate exceeded log(max count)");
  report["warnings"] = warnings;

  json cfg;
  cfg["model"] = std::string(to_string(model));
  cfg["counts"] = o.counts;
  cfg["lambda"] = config.lambda;
  cfg["iters"] = config.max_iters;

  FileSet files;
  files["z_hat.csv"] = matrix_to_csv(fit.z_hat);
  files["fitted.csv"] = matrix_to_csv(fitted);
  files["fit_report.json"] = dump(report);
  files["manifest.json"] = dump(manifest(o, cfg));
  std::cout << "fit " << to_string(model) << " lambda=" << format_real(config.lambda)
            << " rank=" << fit.effective_rank << "\n";
  return files;
}

// ---- risk-curve ----

struct Family {
  EstimatorFamily make;
  std::string parameter;
  std::vector<double> grid;
  bool default_taylor = false;
};

Family make_family(const Options& o, ModelKind model) {
  const std::string& e = o.estimator;
  if (e != "lowrank" && model != ModelKind::Multinomial) {
    throw ConfigError("estimator '" + e + "' needs --model multinomial");
  }
  std::optional<GridSpec> grid;
  if (!o.grid.empty()) grid = parse_grid(o.grid);
  if (grid && o.lambda) throw ConfigError("give either --lambda or --grid, not both");
  const auto values = [&](bool log_spaced, double lo, double hi, std::size_t n,
                          std::optional<double> single = std::nullopt) {
    if (single && (grid || o.lambda)) throw ConfigError("a fixed estimator parameter conflicts with --grid/--lambda");
    if (single) return std::vector<double>{*single};
    if (o.lambda) return std::vector<double>{*o.lambda};
    if (grid) {
      return log_spaced ? log_grid(grid->lo, grid->hi, grid->n) : linear_grid(grid->lo, grid->hi, grid->n);
    }
    return log_spaced ? log_grid(lo, hi, n) : linear_grid(lo, hi, n);
  };

  Family f;
  if (e == "lowrank") {
    FistaConfig fista;
    fista.max_iters = o.iters;
    f.make = [model, fista](double lambda) -> EstimatorSpec { return LowRankSpec{model, lambda, fista}; };
    f.parameter = "lambda";
    f.grid = values(true, 1e-2, 1e2, 30);
    f.default_taylor = true;
  } else if (e == "simple") {
    const double eps = o.eps;
    f.make = [eps](double w) -> EstimatorSpec { return SimpleShrinkSpec{w, eps}; };
    f.parameter = "w";
    f.grid = values(false, 0.0, 1.0, 21, o.w);
  } else if (e == "zr") {
    f.make = [](double z) -> EstimatorSpec { return ZeroReplaceSpec{z}; };
    f.parameter = "z";
    f.grid = values(false, 0.05, 0.95, 19, o.z);
  } else if (e == "ml") {
    if (grid || o.lambda) throw ConfigError("the ml estimator has no parameter; drop --grid/--lambda");
    f.make = [](double) -> EstimatorSpec { return MlSpec{}; };
    f.parameter = "none";
    f.grid = {0.0};
  } else {
    throw ConfigError("unknown estimator '" + e + "'");
  }
  for (double v : f.grid) validate(f.make(v));
  return f;
}

FileSet cmd_risk_curve(const Options& o) {
  const ModelKind model = require_model(o);
  require_path(o.counts, "--counts");
  if (o.iters < 1) throw ConfigError("--iters must be at least 1");
  const Family family = make_family(o, model);

  RiskCurveOptions options;
  options.parameter = family.parameter;
  const bool use_taylor = o.order ? true : (family.default_taylor && !o.exact);
  if (o.order && o.exact) throw ConfigError("--order and --exact are mutually exclusive");
  if (use_taylor) {
    TaylorConfig taylor;
    taylor.order = o.order.value_or(2);
    taylor.num_probe_draws = o.probes;
    taylor.seed = derive_seed(o.seed, {0});
    validate(taylor);
    options.taylor = taylor;
  }
  if (o.cv) {
    if (model != ModelKind::Multinomial) throw ConfigError("--cv needs --model multinomial");
    options.cv = CvConfig{*o.cv, o.cv_splits, derive_seed(o.seed, {1})};
    if (options.cv->folds < 2) throw ConfigError("--cv needs K >= 2");
    if (options.cv->splits < 1) throw ConfigError("--cv-splits must be at least 1");
  }

  const CountMatrix y = read_counts_csv(o.counts);
  if (!o.truth.empty()) options.truth = read_matrix_csv(o.truth);
  const RiskCurve curve = risk_curve(model, family.make, y, family.grid, options);

  json cfg;
  cfg["model"] = std::string(to_string(model));
  cfg["counts"] = o.counts;
  if (!o.truth.empty()) cfg["truth"] = o.truth;
  cfg["estimator"] = o.estimator;
  cfg["parameter"] = family.parameter;
  if (o.estimator == "lowrank") cfg["iters"] = o.iters;
  if (o.estimator == "simple") cfg["eps"] = o.eps;
  if (options.taylor) {
    cfg["order"] = options.taylor->order;
    cfg["probes"] = options.taylor->num_probe_draws;
  } else {
    cfg["decrements"] = "exact";
  }
  if (options.cv) {
    cfg["cv_folds"] = options.cv->folds;
    cfg["cv_splits"] = options.cv->splits;
  }

  FileSet files;
  files["curve.csv"] = curve_to_csv(curve);
  files["curve.json"] = dump(to_json(curve));
  files["manifest.json"] = dump(manifest(o, cfg));
  std::cout << "selected " << family.parameter << "=" << format_real(curve.selected_lambda) << "\n";
  return files;
}

// ---- analyze ----

FileSet cmd_analyze(const Options& o) {
  require_path(o.composition, "--composition");
  require_path(o.totals, "--totals");
  const Matrix p = read_matrix_csv(o.composition);
  const Vector totals = read_vector_csv(o.totals);
  if (!is_composition(p)) throw DataError(o.composition + ": rows must be non-negative and sum to 1");

  const Vector freq = column_frequencies(p, totals);
  const Cooccurrence co = cosine_cooccurrence(p);

  std::string freq_csv = "column,frequency\n";
  for (Eigen::Index j = 0; j < freq.size(); ++j) freq_csv += std::to_string(j) + ',' + format_real(freq(j)) + '\n';
  std::string top_freq_csv = "rank,column,frequency\n";
  std::size_t r = 1;
  for (const auto& c : top_frequencies(freq, o.top)) {
    top_freq_csv += std::to_string(r++) + ',' + std::to_string(c.column) + ',' + format_real(c.frequency) + '\n';
  }
  std::string top_pairs_csv = "rank,first,second,cosine\n";
  r = 1;
  for (const auto& pr : top_pairs(co, o.top)) {
    top_pairs_csv += std::to_string(r++) + ',' + std::to_string(pr.first) + ',' + std::to_string(pr.second) + ',' +
                     format_real(pr.cosine) + '\n';
  }

  json cfg;
  cfg["composition"] = o.composition;
  cfg["totals"] = o.totals;
  cfg["top"] = o.top;
  cfg["degenerate_columns"] = co.degenerate_columns;

  FileSet files;
  files["frequencies.csv"] = freq_csv;
  files["cooccurrence.csv"] = matrix_to_csv(co.values);
  files["top_frequencies.csv"] = top_freq_csv;
  files["top_pairs.csv"] = top_pairs_csv;
  files["manifest.json"] = dump(manifest(o, cfg));
  std::cout << "analyzed " << p.rows() << "x" << p.cols() << "\n";
  return files;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--seed", o.seed, "Random seed");
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "poisson or multinomial");
  sub->add_option("--counts", o.counts, "Count matrix CSV");
  sub->add_option("--iters", o.iters, "FISTA iterations")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Nuclear-norm penalized count models with KL risk estimates"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Generate a ground truth and sample counts");
  add_common(sim, o);
  sim->add_option("--scenario", o.scenario, "case1, case2 or poisson-sinusoid")->capture_default_str();
  sim->add_option("--m", o.m, "Rows")->capture_default_str();
  sim->add_option("--k", o.k, "Columns")->capture_default_str();
  sim->add_option("--n0", o.n0, "Mean row total")->capture_default_str();
  sim->add_option("--rank", o.rank, "Rank for case2")->capture_default_str();
  sim->add_option("--amplitude", o.amplitude, "Sinusoid amplitude")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit the low-rank estimator at one lambda");
  add_common(fit, o);
  add_data(fit, o);
  fit->add_option("--lambda", o.lambda, "Penalty weight");

  auto* curve = app.add_subcommand("risk-curve", "Risk estimates along a parameter grid");
  add_common(curve, o);
  add_data(curve, o);
  curve->add_option("--truth", o.truth, "True composition or intensity CSV");
  curve->add_option("--estimator", o.estimator, "ml, zr, simple or lowrank")->capture_default_str();
  curve->add_option("--lambda", o.lambda, "Single grid value");
  curve->add_option("--grid", o.grid, "LO:HI:N (log-spaced for lowrank, linear otherwise)");
  curve->add_option("--order", o.order, "Taylor order of the decrement approximation");
  curve->add_flag("--exact", o.exact, "Exact decrements (one refit per nonzero entry)");
  curve->add_option("--probes", o.probes, "Rademacher probe draws")->capture_default_str();
  curve->add_option("--cv", o.cv, "Also compute K-fold cross-validation");
  curve->add_option("--cv-splits", o.cv_splits, "Random splits for CV")->capture_default_str();
  curve->add_option("--w", o.w, "Single shrinkage weight instead of a grid (simple)");
  curve->add_option("--eps", o.eps, "Denominator offset (simple)")->capture_default_str();
  curve->add_option("--z", o.z, "Single replacement value instead of a grid (zr)");

  auto* analyze = app.add_subcommand("analyze", "Column frequencies and co-occurrences");
  add_common(analyze, o);
  analyze->add_option("--composition", o.composition, "Fitted composition CSV");
  analyze->add_option("--totals", o.totals, "Row totals CSV");
  analyze->add_option("--top", o.top, "Rows in the ranking tables")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    FileSet files;
    if (sim->parsed()) {
      o.command = "simulate";
      files = cmd_simulate(o);
    } else if (fit->parsed()) {
      o.command = "fit";
      files = cmd_fit(o);
    } else if (curve->parsed()) {
      o.command = "risk-curve";
      files = cmd_risk_curve(o);
    } else {
      o.command = "analyze";
      files = cmd_analyze(o);
    }
    fs::create_directories(o.out);
    for (const auto& [name, contents] : files) write_text(fs::path(o.out) / name, contents);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace klsure::cli
