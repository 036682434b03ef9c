#include "skyle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "skyle/diagnostics.hpp"
#include "skyle/equilibrium.hpp"
#include "skyle/market_sim.hpp"
#include "skyle/markov.hpp"

namespace skyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double get_number(const json& j, const char* key, const std::string& where) {
  const json* v = find(j, key);
  if (!v) throw ConfigError(where + ": missing '" + key + "'");
  if (!v->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v->get<double>();
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer() && !(v->is_number() && std::floor(v->get<double>()) == v->get<double>()))
    throw ConfigError(where + ": '" + key + "' must be an integer");
  const double d = v->get<double>();
  if (d < 0.0) throw ConfigError(where + ": '" + key + "' must be non-negative");
  return static_cast<std::size_t>(d);
}

std::vector<double> get_grid(const json& j, const char* key) {
  const json* v = find(j, key);
  if (!v || !v->is_array() || v->empty()) throw ConfigError(std::string("sweep: '") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number() || !(x.get<double>() > 0.0)) throw ConfigError(std::string("sweep: '") + key + "' entries must be positive");
    out.push_back(x.get<double>());
  }
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }) == allowed.end())
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

std::string json_line(const json& j) { return j.dump(-1, ' ', true); }

std::vector<std::string> header_lines(const ExperimentConfig& cfg) {
  return {"skyle " + std::string(kVersion), "mode: " + std::string(mode_name(cfg.mode)),
          "config: " + json_line(resolved_config(cfg))};
}

Table make_table(const ExperimentConfig& cfg, std::vector<std::string> columns) {
  Table t(std::move(columns));
  for (const auto& l : header_lines(cfg)) t.add_meta(l);
  return t;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

const AcfSpec& require_acf(const std::optional<AcfSpec>& a, const char* which, Mode m) {
  if (!a) throw ConfigError(std::string(which) + " is required in mode " + mode_name(m));
  return *a;
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
  SolverOptions o;
  o.max_iterations = cfg.T_it;
  o.rel_tol = cfg.tol;
  o.relaxation = cfg.relaxation;
  o.mode = cfg.filter;
  o.price_acf_lags = std::max(cfg.T_cut, cfg.max_lag + 2);
  return o;
}

EquilibriumSolution solve_or_throw(const ExperimentConfig& cfg, const AcfSpec& xi, const AcfSpec& nt) {
  auto sol = solve_equilibrium(xi, nt, cfg.T_cut, solver_options(cfg));
  if (!sol.converged)
    throw DivergenceError("no convergence within T_it = " + std::to_string(cfg.T_it) + " iterations",
                          sol.residual_history);
  return sol;
}

void write_solution(const ExperimentConfig& cfg, const EquilibriumSolution& sol, const AcfSpec& xi, const AcfSpec& nt) {
  Table prop = make_table(cfg, {"lag", "G", "R", "R_nt", "R_mu"});
  for (std::size_t k = 0; k < sol.G.size(); ++k)
    prop.add_row(std::vector<double>{static_cast<double>(k), sol.G[k], sol.kernels.R[k], sol.kernels.R_nt[k],
                                     sol.kernels.R_mu[k]});
  prop.write(out_path(cfg, "propagator.tsv"));

  Table conv = make_table(cfg, {"iteration", "residual"});
  for (std::size_t i = 0; i < sol.residual_history.size(); ++i)
    conv.add_row(std::vector<double>{static_cast<double>(i + 1), sol.residual_history[i]});
  conv.write(out_path(cfg, "convergence.tsv"));

  const std::size_t L = std::min(cfg.max_lag, cfg.T_cut - 1);
  const auto rep = diagnose(sol, xi, nt, L, cfg.T_cut);
  Table diag = make_table(cfg, {"lag", "sigma", "omega", "xi_model", "xi_it", "err_xi", "omega_model", "omega_nt",
                                "err_omega", "variogram"});
  diag.add_meta("diagnostics: " + rep.metadata);
  for (std::size_t k = 0; k <= L; ++k)
    diag.add_row(std::vector<double>{static_cast<double>(k), sol.sigma[k], sol.omega_row[k], rep.xi_model[k],
                                     rep.xi_it[k], rep.err_xi[k], rep.omega_model[k], rep.omega_nt[k],
                                     rep.err_omega[k], rep.variogram[k]});
  diag.write(out_path(cfg, "diagnostics.tsv"));

  Table sum = make_table(cfg, {"key", "value"});
  auto kv = [&](const char* k, double v) { sum.add_row(std::vector<std::string>{k, format_number(v)}); };
  kv("converged", sol.converged ? 1.0 : 0.0);
  kv("iterations", static_cast<double>(sol.iterations_run));
  kv("tolerance", sol.tolerance);
  kv("final_residual", sol.residual_history.empty() ? 0.0 : sol.residual_history.back());
  kv("max_jitter", sol.max_jitter);
  kv("G0", sol.G[0]);
  kv("sigma0", sol.sigma[0]);
  kv("omega0", sol.omega_row[0]);
  kv("omega0_over_omega0_nt", sol.omega_row[0] / nt.variance());
  kv("lag0_defect", rep.lag0_defect);
  kv("err_xi_last", rep.err_xi.back());
  kv("err_omega_last", rep.err_omega.back());
  sum.write(out_path(cfg, "summary.tsv"));
}

int run_solve(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& xi = require_acf(cfg.dividend_acf, "dividend_acf", cfg.mode);
  const auto& nt = require_acf(cfg.nt_acf, "nt_acf", cfg.mode);
  const auto sol = solve_or_throw(cfg, xi, nt);
  write_solution(cfg, sol, xi, nt);
  log << "solve: converged in " << sol.iterations_run << " iterations, G0 = " << format_number(sol.G[0]) << "\n";
  return 0;
}

void add_markov_rows(Table& t, const MarkovEquilibrium& eq) {
  auto kv = [&](const char* k, double v) { t.add_row(std::vector<std::string>{k, format_number(v)}); };
  kv("alpha_mu", eq.alpha_mu);
  kv("alpha_nt", eq.alpha_nt);
  kv("rho", eq.rho);
  kv("tau_rho", eq.tau_rho());
  kv("b_tilde", eq.b_tilde);
  kv("G0", eq.G0);
  kv("weight_mu", eq.weight_mu);
  kv("R_nt", eq.R_nt);
  kv("R_mu", eq.R_mu);
  kv("omega0", eq.omega0);
  kv("a", eq.a);
  kv("gamma1", eq.gamma1);
  kv("gamma2", eq.gamma2);
  kv("Gamma1", eq.Gamma1);
  kv("Gamma2", eq.Gamma2);
  kv("kappa", eq.kappa);
  kv("root_defect", eq.root_defect);
  const auto ob = markov_observables(eq);
  kv("sigma0", ob.sigma0);
  kv("sigma0_it", ob.sigma0_it);
  kv("sigma_ratio", ob.sigma_ratio);
  kv("omega_ratio", ob.omega_ratio);
  kv("nt_loss_per_trade", ob.nt_loss_per_trade);
  kv("mm_risk_per_trade", ob.mm_risk_per_trade);
  kv("it_nt_cov_ratio", ob.it_nt_cov_ratio);
  kv("it_mu_cov", ob.it_mu_cov);
  kv("price_error_var", ob.price_error_var);
}

int run_markov(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& xi = require_acf(cfg.dividend_acf, "dividend_acf", cfg.mode);
  const auto& nt = require_acf(cfg.nt_acf, "nt_acf", cfg.mode);
  if (!xi.is_exponential()) throw ConfigError("markov mode needs an exponential dividend ACF");
  if (!nt.is_exponential() && !nt.is_white()) throw ConfigError("markov mode needs an exponential or white NT ACF");
  const double am = xi.markov_alpha();
  Table bundle = make_table(cfg, {"key", "value"});
  Table prop = make_table(cfg, {"lag", "G"});
  if (nt.is_white()) {
    const auto g = closed_form_uncorrelated(am, xi.variance(), nt.variance(), cfg.T_cut);
    bundle.add_row(std::vector<std::string>{"alpha_mu", format_number(am)});
    bundle.add_row(std::vector<std::string>{"G0", format_number(g[0])});
    for (std::size_t k = 0; k < g.size(); ++k) prop.add_row(std::vector<double>{static_cast<double>(k), g[k]});
    log << "markov: white NT closed form, G0 = " << format_number(g[0]) << "\n";
  } else {
    const double an = nt.markov_alpha();
    const auto eq = solve_markov_ansatz(am, an, xi.variance(), nt.variance());
    add_markov_rows(bundle, eq);
    if (std::abs(am - an) < 1e-14) {
      const auto cf = closed_form_equal_timescales(am, xi.variance(), nt.variance());
      bundle.add_row(std::vector<std::string>{"closed_form_rho", format_number(cf.rho)});
      bundle.add_row(std::vector<std::string>{"closed_form_G0", format_number(cf.G0)});
    }
    const auto g = eq.propagator(cfg.T_cut);
    for (std::size_t k = 0; k < g.size(); ++k) prop.add_row(std::vector<double>{static_cast<double>(k), g[k]});
    log << "markov: rho = " << format_number(eq.rho) << ", G0 = " << format_number(eq.G0) << "\n";
  }
  bundle.write(out_path(cfg, "markov.tsv"));
  prop.write(out_path(cfg, "propagator.tsv"));
  return 0;
}

std::uint64_t path_seed(std::uint64_t base, std::size_t i) { return base + 0x9e3779b97f4a7c15ULL * i; }

int run_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& xi = require_acf(cfg.dividend_acf, "dividend_acf", cfg.mode);
  const auto& nt = require_acf(cfg.nt_acf, "nt_acf", cfg.mode);
  if (!cfg.sim) throw ConfigError("simulate mode needs a 'sim' block");
  const SimConfig& sc = *cfg.sim;
  const std::size_t burn = sc.burn_in.value_or(2 * cfg.T_cut);
  const auto sol = solve_or_throw(cfg, xi, nt);
  write_solution(cfg, sol, xi, nt);

  const bool have_lag0 = !nt.is_white() && nt(1) != 0.0;
  double analytic_ab = std::numeric_limits<double>::quiet_NaN();
  if (xi.is_exponential() && nt.is_exponential()) {
    const auto eq = solve_markov_ansatz(xi.markov_alpha(), nt.markov_alpha(), xi.variance(), nt.variance());
    analytic_ab = eq.a * eq.b_tilde;
  }

  struct Row {
    std::uint64_t seed;
    PayoffStats st;
    Estimate lag0{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    ConservationReport cons;
    PathMethod mu_method, nt_method;
  };
  std::vector<Row> rows(sc.n_paths);
  parallel_for(sc.n_paths, cfg.workers, [&](std::size_t i) {
    const std::uint64_t seed = path_seed(sc.base_seed, i);
    const auto path = simulate_market(sol.G, sol.kernels, xi, nt, sc.T, burn, seed);
    Row r{seed, payoff_and_risk_stats(path, xi, cfg.T_cut, sc.batches), {}, path.conservation, path.mu_method,
          path.nt_method};
    if (have_lag0) r.lag0 = lag0_excess(path, nt, sc.batches);
    else r.lag0 = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    rows[i] = std::move(r);
  });

  Table t = make_table(cfg, {"path", "seed", "mm_drift", "mm_drift_se", "nt_loss", "nt_loss_se", "it_gain",
                             "it_gain_se", "gain_balance", "gain_balance_se", "mm_risk", "mm_risk_se", "mm_risk_wick",
                             "mm_risk_wick_se", "risk_difference", "risk_difference_se", "nt_loss_fundamental",
                             "nt_loss_fundamental_se", "mm_risk_fundamental", "mm_risk_fundamental_se", "lag0_excess",
                             "lag0_excess_se", "clearing", "position", "cash", "samples", "horizon"});
  t.add_meta("analytic_a_b_tilde: " + format_number(analytic_ab));
  t.add_meta("burn_in: " + std::to_string(burn));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add_meta("path " + std::to_string(i) + " methods: mu=" + path_method_name(r.mu_method) +
               " nt=" + path_method_name(r.nt_method));
    t.add_row(std::vector<std::string>{
        std::to_string(i), std::to_string(r.seed), format_number(r.st.mm_drift.mean), format_number(r.st.mm_drift.se),
        format_number(r.st.nt_loss.mean), format_number(r.st.nt_loss.se), format_number(r.st.it_gain.mean),
        format_number(r.st.it_gain.se), format_number(r.st.gain_balance.mean), format_number(r.st.gain_balance.se),
        format_number(r.st.mm_risk.mean), format_number(r.st.mm_risk.se), format_number(r.st.mm_risk_wick.mean),
        format_number(r.st.mm_risk_wick.se), format_number(r.st.risk_difference.mean),
        format_number(r.st.risk_difference.se), format_number(r.st.nt_loss_fundamental.mean),
        format_number(r.st.nt_loss_fundamental.se), format_number(r.st.mm_risk_fundamental.mean),
        format_number(r.st.mm_risk_fundamental.se), format_number(r.lag0.mean), format_number(r.lag0.se),
        format_number(r.cons.clearing), format_number(r.cons.position), format_number(r.cons.cash),
        std::to_string(r.st.samples), std::to_string(r.st.horizon)});
  }
  t.write(out_path(cfg, "simulation.tsv"));

  // Ensemble: mean across paths, SE from the path-to-path spread (single path: the batch-means SE).
  Table e = make_table(cfg, {"statistic", "mean", "se", "n_paths"});
  auto ens = [&](const char* name, auto get) {
    const std::size_t n = rows.size();
    double m = 0.0;
    for (const auto& r : rows) m += get(r).mean;
    m /= static_cast<double>(n);
    double se = get(rows[0]).se;
    if (n > 1) {
      double v = 0.0;
      for (const auto& r : rows) v += (get(r).mean - m) * (get(r).mean - m);
      se = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    e.add_row(std::vector<std::string>{name, format_number(m), format_number(se), std::to_string(n)});
  };
  ens("mm_drift", [](const Row& r) { return r.st.mm_drift; });
  ens("nt_loss", [](const Row& r) { return r.st.nt_loss; });
  ens("it_gain", [](const Row& r) { return r.st.it_gain; });
  ens("gain_balance", [](const Row& r) { return r.st.gain_balance; });
  ens("mm_risk", [](const Row& r) { return r.st.mm_risk; });
  ens("mm_risk_wick", [](const Row& r) { return r.st.mm_risk_wick; });
  ens("risk_difference", [](const Row& r) { return r.st.risk_difference; });
  ens("lag0_excess", [](const Row& r) { return r.lag0; });
  e.write(out_path(cfg, "ensemble.tsv"));
  log << "simulate: " << rows.size() << " path(s) of length " << sc.T << "\n";
  return 0;
}

struct CheckRow {
  std::string check, params, metric;
  double value = 0.0, tolerance = 0.0;
  bool pass = false;
};

// sup_k |a_k - b_k| / sup_k |b_k| over lags 0..lags.
double max_rel_error(const CausalKernel& a, const CausalKernel& b, std::size_t lags) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k <= lags && k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return num / (den > 0.0 ? den : 1.0);
}

std::size_t lags_5tau(double alpha) { return static_cast<std::size_t>(std::ceil(-5.0 / std::log(alpha))); }

std::string fmt_params(const char* name, double v) { return std::string(name) + "=" + format_number(v); }

int run_validate(const ExperimentConfig& cfg, std::ostream& log) {
  const std::size_t n = cfg.T_cut;
  const double xi0 = cfg.dividend_acf ? cfg.dividend_acf->variance() : 1.0;
  const double om0 = cfg.nt_acf ? cfg.nt_acf->variance() : 1.0;
  SolverOptions opt = solver_options(cfg);
  opt.price_acf_lags = 1;

  std::vector<std::function<std::vector<CheckRow>()>> jobs;
  for (double a : {0.3, 0.5, 0.8, std::exp(-1.0 / 20.0)}) {
    jobs.emplace_back([=] {
      const double tau = -1.0 / std::log(a);
      const auto sol = solve_equilibrium(AcfSpec::exponential(tau, xi0), AcfSpec::white(om0), n, opt);
      const auto ref = closed_form_uncorrelated(a, xi0, om0, n);
      const double err = max_rel_error(sol.G, ref, lags_5tau(a));
      return std::vector<CheckRow>{{"uncorrelated_closed_form", fmt_params("alpha_mu", a), "max_rel_err_G", err, 1e-5,
                                    sol.converged && err < 1e-5}};
    });
  }
  for (double a : {0.3, 0.6, 0.9}) {
    jobs.emplace_back([=] {
      const double tau = -1.0 / std::log(a);
      const auto sol =
          solve_equilibrium(AcfSpec::exponential(tau, xi0), AcfSpec::exponential(tau, om0), n, opt);
      const auto cf = closed_form_equal_timescales(a, xi0, om0);
      const double err = max_rel_error(sol.G, cf.propagator(n), lags_5tau(a));
      const auto an = solve_markov_ansatz(a, a, xi0, om0);
      const double dr = std::abs(an.rho - cf.rho);
      return std::vector<CheckRow>{
          {"equal_timescales_closed_form", fmt_params("alpha", a), "max_rel_err_G", err, 1e-5,
           sol.converged && err < 1e-5},
          {"equal_timescales_ansatz", fmt_params("alpha", a), "abs_err_rho", dr, 1e-8, dr < 1e-8}};
    });
  }
  for (auto [tm, tn] : {std::pair{5.0, 10.0}, {10.0, 20.0}, {20.0, 10.0}, {40.0, 5.0}}) {
    jobs.emplace_back([=] {
      const double am = std::exp(-1.0 / tm), an = std::exp(-1.0 / tn);
      const auto sol = solve_equilibrium(AcfSpec::exponential(tm, xi0), AcfSpec::exponential(tn, om0), n, opt);
      const auto eq = solve_markov_ansatz(am, an, xi0, om0);
      const auto fit = fit_rho(sol.G, am, an, lags_5tau(am));
      const double dr = std::abs(fit.rho - eq.rho);
      const std::string p = "tau_mu=" + format_number(tm) + ",tau_nt=" + format_number(tn);
      return std::vector<CheckRow>{{"general_markov", p, "abs_err_rho_fit", dr, 1e-3, sol.converged && dr < 1e-3},
                                   {"general_markov", p, "root_defect", std::abs(eq.root_defect), 1e-9,
                                    std::abs(eq.root_defect) < 1e-9}};
    });
  }

  std::vector<std::vector<CheckRow>> results(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) { results[i] = jobs[i](); });

  Table t = make_table(cfg, {"check", "parameters", "metric", "value", "tolerance", "pass"});
  bool all = true;
  for (const auto& rs : results)
    for (const auto& r : rs) {
      all = all && r.pass;
      t.add_row(std::vector<std::string>{r.check, r.params, r.metric, format_number(r.value),
                                         format_number(r.tolerance), r.pass ? "PASS" : "FAIL"});
      log << (r.pass ? "[PASS] " : "[FAIL] ") << r.check << " " << r.params << " " << r.metric << " = "
          << format_number(r.value) << "\n";
    }
  t.write(out_path(cfg, "validate.tsv"));
  return all ? 0 : kExitValidationFailed;
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.sweep) throw ConfigError("sweep mode needs a 'sweep' block");
  const auto& sw = *cfg.sweep;
  const double xi0 = cfg.dividend_acf ? cfg.dividend_acf->variance() : 1.0;
  const double om0 = cfg.nt_acf ? cfg.nt_acf->variance() : 1.0;
  const std::size_t nm = sw.tau_mu.size(), nn = sw.tau_nt.size();
  std::vector<std::vector<double>> rows(nm * nn);
  parallel_for(nm * nn, cfg.workers, [&](std::size_t idx) {
    const double tm = sw.tau_mu[idx / nn], tn = sw.tau_nt[idx % nn];
    const auto eq = solve_markov_ansatz(std::exp(-1.0 / tm), std::exp(-1.0 / tn), xi0, om0);
    const auto ob = markov_observables(eq);
    rows[idx] = {tm, tn, eq.rho, eq.tau_rho(), eq.b_tilde, eq.G0, eq.a, ob.omega_ratio, ob.sigma_ratio,
                 ob.nt_loss_per_trade, ob.mm_risk_per_trade, ob.it_nt_cov_ratio, ob.it_mu_cov};
  });
  Table t = make_table(cfg, {"tau_mu", "tau_nt", "rho", "tau_rho", "b_tilde", "G0", "a", "omega_ratio", "sigma_ratio",
                             "nt_loss_per_trade", "mm_risk_per_trade", "it_nt_cov_ratio", "it_mu_cov"});
  for (const auto& r : rows) t.add_row(r);
  t.write(out_path(cfg, "sweep.tsv"));
  log << "sweep: " << rows.size() << " grid points\n";
  return 0;
}

void write_error_record(const ExperimentConfig* cfg, const std::string& kind, const std::string& message, int code,
                        const std::vector<double>* history) {
  json rec = {{"error", kind}, {"message", message}, {"exit_code", code}, {"version", kVersion}};
  if (history) rec["residual_history"] = *history;
  std::cerr << rec.dump() << "\n";
  if (!cfg) return;
  try {
    fs::create_directories(cfg->output_dir);
    write_atomic(out_path(*cfg, "error.json"), rec.dump(2) + "\n");
  } catch (...) {
    // stderr already carries the record
  }
}

}  // namespace

Mode parse_mode(const std::string& s) {
  if (s == "solve") return Mode::Solve;
  if (s == "markov") return Mode::Markov;
  if (s == "simulate") return Mode::Simulate;
  if (s == "validate") return Mode::Validate;
  if (s == "sweep") return Mode::Sweep;
  throw ConfigError("unknown mode '" + s + "'");
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Solve: return "solve";
    case Mode::Markov: return "markov";
    case Mode::Simulate: return "simulate";
    case Mode::Validate: return "validate";
    case Mode::Sweep: return "sweep";
  }
  return "?";
}

AcfSpec acf_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("ACF spec must be an object");
  const json* fam = find(j, "family");
  if (!fam || !fam->is_string()) throw ConfigError("ACF spec needs a 'family' string");
  const std::string f = fam->get<std::string>();
  const std::string where = "acf(" + f + ")";
  const double var = find(j, "variance") ? get_number(j, "variance", where) : 1.0;
  try {
    if (f == "exponential") {
      check_keys(j, {"family", "tau", "variance"}, where);
      return AcfSpec::exponential(get_number(j, "tau", where), var);
    }
    if (f == "power_law") {
      check_keys(j, {"family", "tau0", "gamma", "variance"}, where);
      return AcfSpec::power_law(get_number(j, "tau0", where), get_number(j, "gamma", where), var);
    }
    if (f == "damped_oscillation") {
      check_keys(j, {"family", "tau1", "tau2", "variance"}, where);
      return AcfSpec::damped_oscillation(get_number(j, "tau1", where), get_number(j, "tau2", where), var);
    }
    if (f == "white") {
      check_keys(j, {"family", "variance"}, where);
      return AcfSpec::white(var);
    }
    if (f == "tabulated") {
      check_keys(j, {"family", "values"}, where);
      const json* v = find(j, "values");
      if (!v || !v->is_array()) throw ConfigError(where + ": 'values' must be an array");
      std::vector<double> vals;
      for (const auto& x : *v) {
        if (!x.is_number()) throw ConfigError(where + ": 'values' must be numeric");
        vals.push_back(x.get<double>());
      }
      return AcfSpec::tabulated(std::move(vals));
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("unknown ACF family '" + f + "'");
}

json acf_to_json(const AcfSpec& spec) {
  return std::visit(
      overloaded{
          [&](const Exponential& e) -> json {
            return {{"family", "exponential"}, {"tau", e.tau}, {"variance", spec.variance()}};
          },
          [&](const PowerLaw& p) -> json {
            return {{"family", "power_law"}, {"tau0", p.tau0}, {"gamma", p.gamma}, {"variance", spec.variance()}};
          },
          [&](const DampedOscillation& d) -> json {
            return {{"family", "damped_oscillation"}, {"tau1", d.tau1}, {"tau2", d.tau2}, {"variance", spec.variance()}};
          },
          [&](const White&) -> json { return {{"family", "white"}, {"variance", spec.variance()}}; },
          [&](const Tabulated& t) -> json {
            std::vector<double> v(t.shape.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = t.shape[i] * spec.variance();
            return {{"family", "tabulated"}, {"values", v}};
          },
      },
      spec.family());
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j, {"mode", "dividend_acf", "nt_acf", "T_cut", "T_it", "tol", "relaxation", "filter", "max_lag", "sim",
                 "sweep", "output_dir", "workers", "time_unit", "tol_scale"},
             "config");
  ExperimentConfig c;
  if (const json* tu = find(j, "time_unit"); tu && (!tu->is_string() || tu->get<std::string>() != "step"))
    throw ConfigError("time_unit must be \"step\"");
  if (const json* ts = find(j, "tol_scale"); ts && (!ts->is_string() || ts->get<std::string>() != "G0"))
    throw ConfigError("tol_scale must be \"G0\" (tol is relative to |G_0|)");
  if (const json* m = find(j, "mode")) {
    if (!m->is_string()) throw ConfigError("mode must be a string");
    c.mode = parse_mode(m->get<std::string>());
  }
  if (const json* a = find(j, "dividend_acf")) c.dividend_acf = acf_from_json(*a);
  if (const json* a = find(j, "nt_acf")) c.nt_acf = acf_from_json(*a);
  c.T_cut = get_count(j, "T_cut", c.T_cut, "config");
  c.T_it = get_count(j, "T_it", c.T_it, "config");
  if (c.T_cut < 2) throw ConfigError("T_cut must be at least 2");
  if (c.T_it < 1) throw ConfigError("T_it must be at least 1");
  if (find(j, "tol")) c.tol = get_number(j, "tol", "config");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (find(j, "relaxation")) c.relaxation = get_number(j, "relaxation", "config");
  if (!(c.relaxation > 0.0 && c.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
  if (const json* f = find(j, "filter")) {
    const std::string s = f->is_string() ? f->get<std::string>() : "";
    if (s == "stationary") c.filter = FilterMode::Stationary;
    else if (s == "block") c.filter = FilterMode::Block;
    else throw ConfigError("filter must be \"stationary\" or \"block\"");
  }
  c.max_lag = get_count(j, "max_lag", c.max_lag, "config");
  if (c.max_lag < 1) throw ConfigError("max_lag must be at least 1");
  if (const json* s = find(j, "sim")) {
    if (!s->is_object()) throw ConfigError("sim must be an object");
    check_keys(*s, {"T", "burn_in", "n_paths", "base_seed", "batches"}, "sim");
    SimConfig sc;
    sc.T = get_count(*s, "T", sc.T, "sim");
    if (find(*s, "burn_in")) sc.burn_in = get_count(*s, "burn_in", 0, "sim");
    sc.n_paths = get_count(*s, "n_paths", sc.n_paths, "sim");
    sc.base_seed = get_count(*s, "base_seed", sc.base_seed, "sim");
    sc.batches = get_count(*s, "batches", sc.batches, "sim");
    if (sc.n_paths < 1) throw ConfigError("sim.n_paths must be at least 1");
    if (sc.batches < 2) throw ConfigError("sim.batches must be at least 2");
    c.sim = sc;
  }
  if (const json* s = find(j, "sweep")) {
    if (!s->is_object()) throw ConfigError("sweep must be an object");
    check_keys(*s, {"tau_mu", "tau_nt"}, "sweep");
    c.sweep = SweepConfig{get_grid(*s, "tau_mu"), get_grid(*s, "tau_nt")};
  }
  if (const json* o = find(j, "output_dir")) {
    if (!o->is_string() || o->get<std::string>().empty()) throw ConfigError("output_dir must be a non-empty string");
    c.output_dir = o->get<std::string>();
  }
  c.workers = get_count(j, "workers", c.workers, "config");
  if (c.workers < 1) c.workers = 1;

  // Mode-required fields.
  switch (c.mode) {
    case Mode::Solve:
    case Mode::Markov:
      require_acf(c.dividend_acf, "dividend_acf", c.mode);
      require_acf(c.nt_acf, "nt_acf", c.mode);
      break;
    case Mode::Simulate:
      require_acf(c.dividend_acf, "dividend_acf", c.mode);
      require_acf(c.nt_acf, "nt_acf", c.mode);
      if (!c.sim) throw ConfigError("simulate mode needs a 'sim' block");
      break;
    case Mode::Sweep:
      if (!c.sweep) throw ConfigError("sweep mode needs a 'sweep' block");
      break;
    case Mode::Validate:
      break;
  }
  if (c.sim) {
    const std::size_t burn = c.sim->burn_in.value_or(2 * c.T_cut);
    if (burn < c.T_cut) throw ConfigError("sim.burn_in must be at least T_cut");
    if (c.sim->T <= burn) throw ConfigError("sim.T must exceed burn_in");
  }
  return c;
}

json resolved_config(const ExperimentConfig& c) {
  json j;
  j["mode"] = mode_name(c.mode);
  j["time_unit"] = "step";
  if (c.dividend_acf) j["dividend_acf"] = acf_to_json(*c.dividend_acf);
  if (c.nt_acf) j["nt_acf"] = acf_to_json(*c.nt_acf);
  j["T_cut"] = c.T_cut;
  j["T_it"] = c.T_it;
  j["tol"] = c.tol;
  j["tol_scale"] = "G0";
  j["relaxation"] = c.relaxation;
  j["filter"] = c.filter == FilterMode::Stationary ? "stationary" : "block";
  j["max_lag"] = c.max_lag;
  if (c.sim) {
    j["sim"] = {{"T", c.sim->T},
                {"burn_in", c.sim->burn_in.value_or(2 * c.T_cut)},
                {"n_paths", c.sim->n_paths},
                {"base_seed", c.sim->base_seed},
                {"batches", c.sim->batches}};
  }
  if (c.sweep) j["sweep"] = {{"tau_mu", c.sweep->tau_mu}, {"tau_nt", c.sweep->tau_nt}};
  j["output_dir"] = c.output_dir;
  // Worker count changes scheduling only, never the numbers, so it is not echoed.
  return j;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Conditioning: return 3;
    case ErrorKind::Divergence: return 4;
    case ErrorKind::Tail: return 5;
    case ErrorKind::Size:
    case ErrorKind::Domain:
    case ErrorKind::Bracketing:
    case ErrorKind::DegenerateInput: return 7;
  }
  return 1;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f) {
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  // Lowest index wins so the reported error does not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int run(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    fs::create_directories(cfg.output_dir);
    switch (cfg.mode) {
      case Mode::Solve: return run_solve(cfg, log);
      case Mode::Markov: return run_markov(cfg, log);
      case Mode::Simulate: return run_simulate(cfg, log);
      case Mode::Validate: return run_validate(cfg, log);
      case Mode::Sweep: return run_sweep(cfg, log);
    }
    return 1;
  } catch (const DivergenceError& e) {
    const int code = exit_code_for(e.kind());
    write_error_record(&cfg, error_kind_name(e.kind()), e.what(), code, &e.history());
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    write_error_record(&cfg, error_kind_name(e.kind()), e.what(), code, nullptr);
    return code;
  } catch (const std::exception& e) {
    write_error_record(&cfg, "internal", e.what(), 1, nullptr);
    return 1;
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Table::add_row(const std::vector<double>& row) {
  std::vector<std::string> s;
  s.reserve(row.size());
  for (double x : row) s.push_back(format_number(x));
  add_row(s);
}

void Table::add_row(const std::vector<std::string>& row) {
  if (row.size() != columns_.size()) throw SizeError("Table: row width does not match the column count");
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += '\t';
    line += row[i];
  }
  rows_.push_back(std::move(line));
}

std::string Table::render() const {
  std::string out;
  for (const auto& m : meta_) out += "# " + m + "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += '\t';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& r : rows_) out += r + "\n";
  return out;
}

void Table::write(const std::string& path) const { write_atomic(path, render()); }

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace skyle
