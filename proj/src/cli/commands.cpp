#include "mmrd/cli/commands.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "mmrd/design/csv_io.hpp"
#include "mmrd/errors.hpp"
#include "mmrd/mestimate/efficiency.hpp"
#include "mmrd/mestimate/fit.hpp"
#include "mmrd/optimizer/optimizer.hpp"
#include "mmrd/simulate/dependence.hpp"
#include "mmrd/simulate/monte_carlo.hpp"

namespace mmrd::cli {

namespace {

// Every number leaves the program at 12 significant digits.
Json num(double v) { return Json(csv::round12(v)); }

Json nums(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json mat(const Matrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) a.push_back(nums(m.row(i)));
  return a;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) require(ok.count(k) > 0, "unknown key '" + k + "' in " + where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream f(path);
  require(static_cast<bool>(f), "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

struct Problem {
  DesignSpace space;
  ModelBasis basis;
};

Problem make_problem(const RunConfig& cfg) {
  if (cfg.basis_file) {
    csv::ExternalBasis eb = csv::read_external_basis(*cfg.basis_file);
    return {std::move(eb.space), make_basis(std::move(eb.F))};
  }
  DesignSpace space = cfg.points_file ? csv::read_points(*cfg.points_file) : DesignSpace::grid(cfg.lo, cfg.hi, cfg.N);
  const ModelSpec model = cfg.monomials ? ModelSpec::monomials(*cfg.monomials) : ModelSpec::polynomial(cfg.degree);
  require(space.size() >= model.size(), "design space has fewer points than model parameters");
  ModelBasis basis = make_basis(space, model);
  return {std::move(space), std::move(basis)};
}

Json loss_json(const ModelBasis& basis, const MomentSet& ms, const LossParams& params, std::optional<long> n) {
  const LossReport r = evaluate(ms, params);
  const InformationDiagnostic info = information_diagnostic(ms);
  Json j{{"nu", num(params.nu)},
         {"trace_term", num(r.trace_term)},
         {"bias_term", num(r.bias_term)},
         {"i_nu", num(r.i_nu)},
         {"support_size", r.support_size},
         {"ch_min_M0", num(info.ch_min_M0)},
         {"information_flagged", info.flagged}};
  if (r.j_value) {
    j["j_value"] = num(*r.j_value);
    if (n) {
      j["j_over_n"] = num(*r.j_value / static_cast<double>(*n));
      const WorstCaseTau wc = worst_case_tau(basis, ms, params.raw->kappa, *n);
      j["worst_case_tau"] = Json{{"tau", nums(wc.tau)},
                                 {"multiplicity", wc.multiplicity},
                                 {"degenerate_complement", wc.degenerate_complement}};
    }
  }
  return j;
}

Json fit_json(const FitResult& r, const PsiSpec& psi, std::size_t n) {
  return Json{{"psi", psi.name()},
              {"tuning", num(psi.tuning)},
              {"n", n},
              {"theta_hat", nums(r.theta_hat)},
              {"sigma_hat", num(r.sigma_hat)},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"scale_collapse", r.scale_collapse},
              {"estimating_equation_norm", num(r.estimating_equation_norm)}};
}

ErrorModel parse_errors(const Json& j) {
  check_keys(j, {"family", "sigma", "frac", "inflate", "df", "scale", "rho"}, "simulate.errors");
  const std::string fam = j.value("family", "normal");
  if (fam == "normal") return ErrorModel::normal(j.value("sigma", 1.0));
  if (fam == "contaminated_normal")
    return ErrorModel::contaminated_normal(j.value("sigma", 1.0), j.value("frac", 0.1), j.value("inflate", 3.0));
  if (fam == "student_t") return ErrorModel::student_t(j.value("df", 5.0), j.value("scale", 1.0));
  if (fam == "equicorrelated") return ErrorModel::equicorrelated(j.value("sigma", 1.0), j.value("rho", 0.0));
  fail(ErrorKind::InvalidInput, "unknown error family '" + fam + "'");
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j, const fs::path& base) {
  check_keys(j, {"space", "model", "nu", "raw", "n", "psi", "optimizer", "seed", "out", "design_file", "data_file",
                 "simulate", "nu_analysis"},
             "config");
  RunConfig c;
  if (j.contains("space")) {
    const Json& s = j["space"];
    check_keys(s, {"lo", "hi", "N", "points_file"}, "space");
    c.lo = s.value("lo", c.lo);
    c.hi = s.value("hi", c.hi);
    c.N = s.value("N", c.N);
    if (s.contains("points_file")) c.points_file = resolve(base, s["points_file"].get<std::string>());
  }
  if (j.contains("model")) {
    const Json& m = j["model"];
    check_keys(m, {"degree", "monomials", "basis_file"}, "model");
    c.degree = m.value("degree", c.degree);
    if (m.contains("monomials")) c.monomials = m["monomials"].get<std::vector<Monomial>>();
    if (m.contains("basis_file")) c.basis_file = resolve(base, m["basis_file"].get<std::string>());
  }
  if (j.contains("nu")) c.nu = j["nu"].get<double>();
  if (j.contains("raw")) {
    const Json& r = j["raw"];
    check_keys(r, {"kappa", "sigma_m2", "eta0_sq"}, "raw");
    c.raw = LossParams::Raw{r.at("kappa").get<double>(), r.at("sigma_m2").get<double>(), r.value("eta0_sq", 1.0)};
  }
  c.n = j.value("n", c.n);
  if (j.contains("psi")) {
    const Json& p = j["psi"];
    check_keys(p, {"family", "tuning"}, "psi");
    c.psi = PsiSpec::parse(p.value("family", std::string("huber")), p.value("tuning", 1.345));
  }
  if (j.contains("optimizer")) {
    const Json& o = j["optimizer"];
    check_keys(o, {"max_iters", "tol_rel", "window"}, "optimizer");
    c.max_iters = o.value("max_iters", c.max_iters);
    c.tol_rel = o.value("tol_rel", c.tol_rel);
    c.window = o.value("window", c.window);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("out")) c.out = resolve(base, j["out"].get<std::string>());
  if (j.contains("design_file")) c.design_file = resolve(base, j["design_file"].get<std::string>());
  if (j.contains("data_file")) c.data_file = resolve(base, j["data_file"].get<std::string>());
  if (j.contains("simulate")) {
    const Json& s = j["simulate"];
    check_keys(s, {"reps", "threads", "tau", "true_mean_file", "kappa", "theta0", "errors", "sweep"}, "simulate");
    c.reps = s.value("reps", c.reps);
    c.threads = s.value("threads", c.threads);
    c.tau_mode = s.value("tau", c.tau_mode);
    require(c.tau_mode == "zero" || c.tau_mode == "worst_case" || c.tau_mode == "true_mean",
            "simulate.tau must be zero, worst_case or true_mean");
    if (s.contains("true_mean_file")) c.true_mean_file = resolve(base, s["true_mean_file"].get<std::string>());
    c.kappa = s.value("kappa", c.kappa);
    if (s.contains("theta0")) c.theta0 = s["theta0"].get<Vector>();
    if (s.contains("errors")) c.errors = parse_errors(s["errors"]);
    if (s.contains("sweep")) {
      const Json& w = s["sweep"];
      check_keys(w, {"enabled", "rho_grid", "alpha_max_sq", "reps"}, "simulate.sweep");
      c.sweep = w.value("enabled", c.sweep);
      c.rho_grid = w.value("rho_grid", c.rho_grid);
      c.alpha_max_sq = w.value("alpha_max_sq", c.alpha_max_sq);
      c.sweep_reps = w.value("reps", c.sweep_reps);
    }
  }
  if (j.contains("nu_analysis")) {
    const Json& a = j["nu_analysis"];
    check_keys(a, {"c_min", "c_max", "c_points", "gamma_sq_min", "gamma_sq_max", "gamma_sq_points"}, "nu_analysis");
    c.c_min = a.value("c_min", c.c_min);
    c.c_max = a.value("c_max", c.c_max);
    c.c_points = a.value("c_points", c.c_points);
    c.gamma_sq_min = a.value("gamma_sq_min", c.gamma_sq_min);
    c.gamma_sq_max = a.value("gamma_sq_max", c.gamma_sq_max);
    c.gamma_sq_points = a.value("gamma_sq_points", c.gamma_sq_points);
  }
  require(c.n >= 1, "n must be positive");
  if (!c.points_file && !c.basis_file) {
    require(c.N >= 1 && c.hi > c.lo, "invalid grid");
    if (!c.monomials) require(c.degree >= 0 && c.N >= static_cast<std::size_t>(c.degree) + 1,
                              "grid has fewer points than model parameters");
  }
  return c;
}

LossParams RunConfig::loss_params() const {
  require(nu.has_value() != raw.has_value(), "give exactly one of nu or raw (kappa, sigma_m2, eta0_sq)");
  if (nu) {
    require(*nu >= 0.0 && *nu <= 1.0, "nu must lie in [0, 1]");
    return LossParams::from_nu(*nu);
  }
  return LossParams::from_raw(raw->kappa, raw->sigma_m2, raw->eta0_sq);
}

RunConfig load_config(const std::optional<fs::path>& path, const Overrides& ov) {
  RunConfig c;
  if (path) {
    std::ifstream f(*path);
    require(static_cast<bool>(f), "cannot open config " + path->string());
    Json j;
    try {
      j = Json::parse(f);
    } catch (const Json::exception& e) {
      fail(ErrorKind::InvalidInput, "config is not valid JSON: " + std::string(e.what()));
    }
    c = RunConfig::from_json(j, path->parent_path());
  }
  if (ov.nu) {
    c.nu = ov.nu;
    c.raw.reset();
  }
  if (ov.n) {
    require(*ov.n >= 1, "n must be positive");
    c.n = *ov.n;
  }
  if (ov.seed) c.seed = *ov.seed;
  if (ov.out) c.out = *ov.out;
  return c;
}

Json cmd_design(const RunConfig& cfg) {
  const LossParams params = cfg.loss_params();
  const Problem pr = make_problem(cfg);
  OptimizerConfig oc;
  oc.nu = params.nu;
  oc.max_iters = cfg.max_iters;
  oc.tol_rel = cfg.tol_rel;
  oc.window = cfg.window;
  const OptimizerResult opt = sequential_minimax(pr.basis, oc);
  const RoundedDesign rd = make_implementable(pr.basis, opt.design, cfg.n, params.nu);

  fs::create_directories(cfg.out);
  const fs::path cont = cfg.out / "design_continuous.csv";
  const fs::path impl = cfg.out / "design_implementable.csv";
  csv::write_continuous_design(cont, pr.space, opt.design);
  csv::write_implementable_design(impl, pr.space, rd.design);
  write_trace_csv(cfg.out / "trace.csv", opt.trace);

  // Losses are computed from the files as written so that `evaluate` on them
  // reproduces this report exactly.
  const Design xi_file = *csv::read_design(cont, pr.space).continuous;
  const ImplementableDesign impl_file = *csv::read_design(impl, pr.space).implementable;

  Json report{{"continuous", loss_json(pr.basis, moments(pr.basis, xi_file), params, cfg.n)},
              {"implementable", loss_json(pr.basis, moments(pr.basis, impl_file.as_design()), params, impl_file.n)},
              {"n", cfg.n},
              {"removals", rd.removals},
              {"optimizer",
               Json{{"converged", opt.converged},
                    {"iterations", opt.trace.size()},
                    {"k_final", num(opt.k_final)},
                    {"initial_i_nu", num(opt.initial_i_nu)},
                    {"i_nu", num(opt.i_nu)}}}};
  write_json(cfg.out / "loss_report.json", report);
  return report;
}

Json cmd_evaluate(const RunConfig& cfg, const fs::path& design_file) {
  const LossParams params = cfg.loss_params();
  const Problem pr = make_problem(cfg);
  const csv::DesignFile df = csv::read_design(design_file, pr.space);
  Json report;
  if (df.continuous) {
    report = Json{{"design_kind", "continuous"}, {"loss", loss_json(pr.basis, moments(pr.basis, *df.continuous), params, cfg.n)}};
  } else {
    const ImplementableDesign& d = *df.implementable;
    report = Json{{"design_kind", "implementable"},
                  {"n", d.n},
                  {"loss", loss_json(pr.basis, moments(pr.basis, d.as_design()), params, d.n)}};
  }
  fs::create_directories(cfg.out);
  write_json(cfg.out / "loss_report.json", report);
  return report;
}

Json cmd_estimate(const RunConfig& cfg, const fs::path& data_file) {
  const csv::Dataset data = csv::read_dataset(data_file);
  Matrix X;
  if (cfg.basis_file) {
    const Problem pr = make_problem(cfg);
    X = regressor_rows(pr.space, ModelSpec::external(pr.basis.F), data.x);
  } else {
    const ModelSpec model = cfg.monomials ? ModelSpec::monomials(*cfg.monomials) : ModelSpec::polynomial(cfg.degree);
    X = Matrix(data.x.rows(), model.size());
    for (std::size_t i = 0; i < data.x.rows(); ++i) {
      const Vector f = model.evaluate(data.x.row(i));
      std::copy(f.begin(), f.end(), X.row(i).begin());
    }
  }
  require(X.rows() >= X.cols(), "fewer observations than parameters");
  const FitResult r = fit(Observations{X, data.y}, cfg.psi);
  const Json out = fit_json(r, cfg.psi, X.rows());
  fs::create_directories(cfg.out);
  write_json(cfg.out / "fit.json", out);
  return out;
}

Json cmd_simulate(const RunConfig& cfg) {
  const Problem pr = make_problem(cfg);
  std::optional<ImplementableDesign> chosen;
  if (cfg.design_file) {
    chosen = csv::read_design(*cfg.design_file, pr.space).implementable;
    require(chosen.has_value(), "simulate needs an implementable design (column n_i)");
  } else {
    const LossParams params = cfg.loss_params();
    OptimizerConfig oc;
    oc.nu = params.nu;
    oc.max_iters = cfg.max_iters;
    oc.tol_rel = cfg.tol_rel;
    oc.window = cfg.window;
    chosen = make_implementable(pr.basis, sequential_minimax(pr.basis, oc).design, cfg.n, params.nu).design;
  }
  const ImplementableDesign& design = *chosen;

  const MomentSet ms = moments(pr.basis, design.as_design());
  const double kappa = cfg.raw ? cfg.raw->kappa : cfg.kappa;
  std::optional<Disturbance> tau;
  if (cfg.tau_mode == "zero") {
    tau = Disturbance::zero(pr.basis, kappa, design.n);
  } else if (cfg.tau_mode == "worst_case") {
    tau = worst_case_tau(pr.basis, ms, kappa, design.n).disturbance(pr.basis);
  } else {
    require(cfg.true_mean_file.has_value(), "simulate.tau = true_mean needs true_mean_file");
    const TargetParameter tp = target_parameter(pr.basis.F, csv::read_true_mean(*cfg.true_mean_file, pr.space));
    tau = Disturbance::tightest(pr.basis, tp.tau, design.n);
  }

  ErrorModel err = cfg.errors;
  err.seed = cfg.seed;
  MCConfig mc_cfg;
  mc_cfg.reps = cfg.reps;
  mc_cfg.threads = cfg.threads;
  mc_cfg.theta0 = cfg.theta0;
  const MCReport mc = run_mc(pr.basis, design, cfg.psi, err, *tau, mc_cfg);

  Json report{{"psi", cfg.psi.name()},
              {"tuning", num(cfg.psi.tuning)},
              {"errors", err.name()},
              {"seed", mc.seed},
              {"n", mc.n},
              {"counts", design.counts},
              {"tau_mode", cfg.tau_mode},
              {"kappa", num(tau->kappa())},
              {"requested", mc.requested},
              {"replicates", mc.replicates},
              {"failures", mc.failures},
              {"convergence_rate", num(mc.convergence_rate)},
              {"theta0", nums(mc.theta0)},
              {"sigma_m2", num(mc.sigma_m2)},
              {"empirical_bias", nums(mc.empirical_bias)},
              {"bias_std_err", nums(mc.bias_std_err)},
              {"predicted_bias", nums(mc.predicted_bias)},
              {"bias_z", nums(mc.bias_z)},
              {"empirical_cov", mat(mc.empirical_cov)},
              {"predicted_cov", mat(mc.predicted_cov)},
              {"cov_relative_gap", num(mc.cov_relative_gap)},
              {"empirical_imse", num(mc.empirical_imse)},
              {"imse_std_err", num(mc.imse_std_err)},
              {"predicted_imse", num(mc.predicted_imse)},
              {"ks_distance", nums(mc.ks_distance)},
              {"ks_threshold", num(mc.ks_threshold)}};
  if (mc.j_over_n) {
    report["j_over_n"] = num(*mc.j_over_n);
    report["imse_relative_gap"] = num(mc.empirical_imse / *mc.j_over_n - 1.0);
  }

  fs::create_directories(cfg.out);
  if (cfg.sweep) {
    const DependenceSweep sw = dependence_sweep(pr.basis, design, cfg.psi, cfg.rho_grid, cfg.alpha_max_sq,
                                                cfg.sweep_reps, cfg.seed, cfg.threads);
    write_sweep_csv(cfg.out / "sweep.csv", sw);
    report["sweep"] = Json{{"eta_sq", num(sw.eta_sq)},
                           {"rho_max", num(sw.rho_max)},
                           {"within_bound", sw.within_bound},
                           {"analytic_within_bound", sw.analytic_within_bound},
                           {"tightness_gap", num(sw.tightness_gap)}};
  }
  write_json(cfg.out / "mc_report.json", report);
  return report;
}

Json cmd_nu_analysis(const RunConfig& cfg) {
  const Vector cs = log_grid(cfg.c_min, cfg.c_max, cfg.c_points);
  const Vector gs = log_grid(cfg.gamma_sq_min, cfg.gamma_sq_max, cfg.gamma_sq_points);
  const NuTable t = nu_analysis(cs, gs);
  std::vector<std::vector<double>> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) rows.push_back({r.c, r.gamma_sq, r.G, r.nu_ls, r.nu_m, r.diff});
  fs::create_directories(cfg.out);
  csv::write(cfg.out / "nu_table.csv", {"c", "gamma_sq", "G", "nu_ls", "nu_m", "diff"}, rows);
  const NuCalculus& m = t.refined;
  return Json{{"rows", t.rows.size()},
              {"max_diff", num(m.diff)},
              {"c", num(m.c)},
              {"gamma_sq", num(m.gamma_sq)},
              {"nu_ls", num(m.nu_ls)},
              {"nu_m", num(m.nu_m)},
              {"bound", num(max_nu_difference())}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimax robust regression designs: construction, evaluation, estimation, simulation", "mmrd"};
  app.require_subcommand(1);
  std::optional<std::string> config;
  Overrides ov;
  std::optional<std::string> out_dir;
  app.add_option("--config", config, "JSON configuration file");
  app.add_option("--nu", ov.nu, "bias/variance emphasis in [0, 1] (overrides the config)");
  app.add_option("--n", ov.n, "number of observations");
  app.add_option("--seed", ov.seed, "random seed");
  app.add_option("--out", out_dir, "output directory");

  std::string design_path, data_path;
  auto* design = app.add_subcommand("design", "optimize a design; write design CSVs, loss_report.json and trace.csv");
  auto* evaluate = app.add_subcommand("evaluate", "loss of a design file; write loss_report.json");
  evaluate->add_option("design", design_path, "design CSV (x..., weight) or (x..., n_i)");
  auto* estimate = app.add_subcommand("estimate", "M-estimate from a data file; write fit.json");
  estimate->add_option("data", data_path, "data CSV (x..., y)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation; write mc_report.json and sweep.csv");
  auto* nu = app.add_subcommand("nu-analysis", "nu_LS - nu_M surface; write nu_table.csv");
  for (auto* sub : {design, evaluate, estimate, simulate, nu}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (out_dir) ov.out = fs::path(*out_dir);
    std::optional<fs::path> cfg_path;
    if (config) cfg_path = fs::path(*config);
    const RunConfig cfg = load_config(cfg_path, ov);
    Json result;
    if (*design) {
      result = cmd_design(cfg);
    } else if (*evaluate) {
      if (design_path.empty()) {
        require(cfg.design_file.has_value(), "evaluate needs a design file");
        result = cmd_evaluate(cfg, *cfg.design_file);
      } else {
        result = cmd_evaluate(cfg, design_path);
      }
    } else if (*estimate) {
      if (data_path.empty()) {
        require(cfg.data_file.has_value(), "estimate needs a data file");
        result = cmd_estimate(cfg, *cfg.data_file);
      } else {
        result = cmd_estimate(cfg, data_path);
      }
    } else if (*simulate) {
      result = cmd_simulate(cfg);
    } else {
      result = cmd_nu_analysis(cfg);
    }
    out << result.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_numerical() ? 2 : 1;
  } catch (const Json::exception& e) {
    err << "error: invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mmrd::cli
