#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "melfun/melfun.hpp"

namespace melfun::cli {

//! Exit codes: 0 success, 2 input error, 3 assumption violation (development
//! point outside its admissible range, infinite weighted sup-norm, divergent
//! moment), 4 numeric failure.
enum ExitCode
{
  exit_ok = 0,
  exit_input = 2,
  exit_assumption = 3,
  exit_numeric = 4
};

namespace detail {

inline std::vector<double> read_sample_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw SchemaError("", "cannot open input file: " + path);
  std::vector<double> ys;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // tolerate whitespace and a trailing blank line
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(b, e - b + 1);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size())
      throw SchemaError("", "line " + std::to_string(lineno) +
                              ": not a number: '" + tok + "'");
    if (!std::isfinite(v) || v <= 0.0)
      throw SchemaError("", "line " + std::to_string(lineno) +
                              ": observations must be positive and finite");
    ys.push_back(v);
  }
  if (ys.empty())
    throw SchemaError("", "input file contains no observations: " + path);
  return ys;
}

inline void emit(const std::string& content,
                 const std::optional<std::string>& path, std::ostream& out)
{
  if (path)
    atomic_write_file(*path, content);
  else
    out << content << "\n";
}

inline json read_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw SchemaError("", "cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("scenario is not valid JSON: ") +
                            e.what());
  }
  return j;
}

struct EstimateFlags
{
  std::string input;
  std::string functional;
  double x0 = 1.0;
  double c = 1.0;
  std::string error_spec;
  double k = 0.0;
  bool adaptive = false;
  double chi = 72.0;
  std::string grid = "theoretical";
  int max_k = 0;
  std::optional<std::string> output;
};

inline SelectionConfig selection_config_from(const EstimateFlags& f)
{
  SelectionConfig cfg;
  cfg.chi = f.chi;
  if (f.grid == "practical")
    cfg.grid_mode = SelectionConfig::GridMode::Practical;
  else
    cfg.grid_mode = SelectionConfig::GridMode::Theoretical;
  if (f.max_k > 0)
    cfg.max_k_override = f.max_k;
  return cfg;
}

inline void add_common_model_flags(CLI::App* cmd, EstimateFlags& f,
                                   bool need_input)
{
  if (need_input)
    cmd
      ->add_option("--input", f.input,
                   "CSV file with one positive observation per line")
      ->required();
  cmd
    ->add_option("--functional", f.functional,
                 "target functional: density | cdf | survival | laplace "
                 "(cdf and laplace need c < 1, survival needs c > 1)")
    ->required()
    ->check(CLI::IsMember({ "density", "cdf", "survival", "laplace" }));
  cmd->add_option("--x0", f.x0, "evaluation point x0 > 0")->required();
  cmd
    ->add_option("--c", f.c,
                 "development point of the Mellin transform; must lie in the "
                 "admissible range of both the functional and the error "
                 "model")
    ->required();
  cmd
    ->add_option("--error", f.error_spec,
                 "known error density, e.g. beta:1, beta:2, gamma:2.0, "
                 "weibull:1.5, lognormal:0:1, sloggamma:0:2:3 (beta and "
                 "sloggamma have polynomially decaying transforms; gamma, "
                 "weibull and lognormal decay exponentially)")
    ->required();
}

struct SimFlags
{
  std::string scenario;
  std::optional<std::string> output;
  std::optional<std::string> csv;
  int threads = 0;
};

inline void add_sim_flags(CLI::App* cmd, SimFlags& f)
{
  cmd->add_option("--scenario", f.scenario, "scenario JSON document")
    ->required();
  cmd->add_option("--output", f.output, "write the JSON report here "
                                        "(atomically); default stdout");
  cmd->add_option("--csv", f.csv, "also write a flat per-replication CSV");
  cmd->add_option("--threads", f.threads,
                  "worker threads (0 = all cores); results are identical "
                  "for every thread count");
}

} // namespace detail

//! Entry point shared by the binary and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err)
{
  CLI::App app{ "melfun: linear functionals of a density under "
                "multiplicative measurement error, via Mellin-domain "
                "spectral cut-off estimation" };
  app.require_subcommand(1);

  detail::EstimateFlags ef;
  detail::SimFlags sim_f, rates_f;
  std::vector<double> delta_ks;
  std::optional<std::string> est_out, delta_out, regime_out, select_out;

  auto* est = app.add_subcommand(
    "estimate", "estimate the functional from a sample of contaminated "
                "observations, at a fixed cut-off (--k) or with the "
                "data-driven cut-off (--adaptive)");
  detail::add_common_model_flags(est, ef, true);
  auto* kopt = est->add_option("--k", ef.k, "fixed spectral cut-off (> 0)");
  auto* aopt = est->add_flag("--adaptive", ef.adaptive,
                             "select the cut-off from the data");
  est->add_option("--chi", ef.chi,
                  "penalty constant; the certified guarantee needs chi >= 72, "
                  "smaller values are allowed on the practical grid");
  est->add_option("--grid", ef.grid, "admissible grid: theoretical caps k at "
                                     "sqrt(n)/log(n)^2, practical at sqrt(n)")
    ->check(CLI::IsMember({ "theoretical", "practical" }));
  est->add_option("--max-k", ef.max_k, "extra cap on the cut-off grid");
  est->add_option("--output", est_out, "write the JSON report here");
  kopt->excludes(aopt);

  detail::EstimateFlags sf;
  auto* sel = app.add_subcommand(
    "select", "run the data-driven cut-off selection and report the full "
              "per-k comparison table");
  detail::add_common_model_flags(sel, sf, true);
  sel->add_option("--chi", sf.chi, "penalty constant (certified when >= 72)");
  sel->add_option("--grid", sf.grid, "theoretical | practical")
    ->check(CLI::IsMember({ "theoretical", "practical" }));
  sel->add_option("--max-k", sf.max_k, "extra cap on the cut-off grid");
  sel->add_option("--output", select_out, "write the JSON report here");

  detail::EstimateFlags df;
  auto* del = app.add_subcommand(
    "delta", "evaluate the variance proxy Delta(k) = (1/2pi) "
             "int_{-k}^{k} |Psi(t)/M_c[g](t)|^2 dt");
  detail::add_common_model_flags(del, df, false);
  del->add_option("--k", delta_ks, "cut-off value(s)")->required();
  del->add_option("--output", delta_out, "write the JSON report here");

  detail::EstimateFlags rf;
  auto* reg = app.add_subcommand(
    "regime", "classify the estimation problem: parametric (Delta bounded, "
              "any large fixed cut-off attains a 1/n rate) or nonparametric "
              "(cut-off choice matters)");
  detail::add_common_model_flags(reg, rf, false);
  reg->add_option("--output", regime_out, "write the JSON report here");

  auto* sim = app.add_subcommand(
    "simulate", "run a Monte Carlo scenario (Y = X*U) and report the risk");
  detail::add_sim_flags(sim, sim_f);

  auto* rates = app.add_subcommand(
    "rates", "run a scenario across several sample sizes and fit the "
             "log-log risk slope");
  detail::add_sim_flags(rates, rates_f);

  try {
    std::vector<const char*> argv;
    argv.push_back("melfun");
    for (const auto& a : args)
      argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "melfun: " << e.what() << "\n";
    return exit_input;
  }

  try {
    if (est->parsed()) {
      if (!ef.adaptive && kopt->count() == 0)
        throw SchemaError("", "either --k or --adaptive is required");
      if (!ef.adaptive && !(ef.k > 0.0))
        throw SchemaError("", "--k must be positive");
      const ErrorModel model = parse_error_model(ef.error_spec);
      const FunctionalSpec spec = parse_functional(ef.functional, ef.x0);
      const Sample sample(detail::read_sample_file(ef.input));
      json j;
      if (ef.adaptive) {
        j = to_json(
          select_k(sample, spec, model, ef.c, detail::selection_config_from(ef)));
      } else {
        j = to_json(theta_hat(sample, spec, model, ef.c, ef.k));
      }
      detail::emit(j.dump(2), est_out, out);
      return exit_ok;
    }

    if (sel->parsed()) {
      const ErrorModel model = parse_error_model(sf.error_spec);
      const FunctionalSpec spec = parse_functional(sf.functional, sf.x0);
      const Sample sample(detail::read_sample_file(sf.input));
      const auto rep =
        select_k(sample, spec, model, sf.c, detail::selection_config_from(sf));
      detail::emit(to_json(rep).dump(2), select_out, out);
      return exit_ok;
    }

    if (del->parsed()) {
      const ErrorModel model = parse_error_model(df.error_spec);
      const FunctionalSpec spec = parse_functional(df.functional, df.x0);
      json values = json::array();
      for (const double k : delta_ks) {
        if (k < 0.0)
          throw SchemaError("", "--k must be nonnegative");
        values.push_back(
          { { "k", k }, { "delta", delta_psi_g(spec, model, df.c, k) } });
      }
      const Regime r = classify_regime(psi_decay(spec, df.c),
                                       decay_class(model, df.c));
      detail::emit(
        json{ { "values", values }, { "regime", to_string(r) } }.dump(2),
        delta_out, out);
      return exit_ok;
    }

    if (reg->parsed()) {
      const ErrorModel model = parse_error_model(rf.error_spec);
      const FunctionalSpec spec = parse_functional(rf.functional, rf.x0);
      const PsiDecay pd = psi_decay(spec, rf.c);
      const DecayClass gd = decay_class(model, rf.c);
      json j;
      j["psi_decay"] = { { "kind", pd.kind == PsiDecay::Kind::Smooth
                                     ? "smooth"
                                     : "super_smooth" },
                         { "p", pd.p } };
      if (pd.kind == PsiDecay::Kind::SuperSmooth) {
        j["psi_decay"]["mu"] = pd.mu;
        j["psi_decay"]["R"] = pd.R;
      }
      j["g_decay"] = { { "kind", gd.kind == DecayClass::Kind::Smooth
                                   ? "smooth"
                                   : "super_smooth" },
                       { "gamma", gd.gamma } };
      if (gd.kind == DecayClass::Kind::SuperSmooth) {
        j["g_decay"]["lambda"] = gd.lambda;
        j["g_decay"]["rho"] = gd.rho;
      }
      j["regime"] = to_string(classify_regime(pd, gd));
      detail::emit(j.dump(2), regime_out, out);
      return exit_ok;
    }

    if (sim->parsed()) {
      const ScenarioFile sfile =
        scenario_from_json(detail::read_json_file(sim_f.scenario), false);
      const Scenario& sc = sfile.scenario;
      const double truth = true_value(sc.target, sc.functional);
      const auto outcomes = run_replications(sc, sim_f.threads);
      std::vector<double> sq(outcomes.size());
      std::vector<ReplicationRow> rows(outcomes.size());
      for (std::size_t r = 0; r < outcomes.size(); ++r) {
        const double e = outcomes[r].theta - truth;
        sq[r] = e * e;
        rows[r] = { sc.n,           static_cast<int>(r), outcomes[r].k,
                    outcomes[r].theta, truth,            sq[r] };
      }
      json j;
      j["scenario"] = scenario_to_json(sfile);
      j["theta_true"] = truth;
      j["mse"] = mean(sq);
      j["stderr"] = jackknife_se_mean(sq);
      std::vector<double> thetas(outcomes.size());
      for (std::size_t r = 0; r < outcomes.size(); ++r)
        thetas[r] = outcomes[r].theta;
      j["mean_theta_hat"] = mean(thetas);
      detail::emit(j.dump(2), sim_f.output, out);
      if (sim_f.csv)
        atomic_write_file(*sim_f.csv, replication_csv(rows));
      return exit_ok;
    }

    if (rates->parsed()) {
      const ScenarioFile sfile =
        scenario_from_json(detail::read_json_file(rates_f.scenario), true);
      const Scenario& sc = sfile.scenario;
      double theory = std::numeric_limits<double>::quiet_NaN();
      const PsiDecay pd = psi_decay(sc.functional, sc.c);
      const DecayClass gd = decay_class(sc.error, sc.c);
      const Regime regime = classify_regime(pd, gd);
      if (regime == Regime::Parametric)
        theory = -1.0;
      else if (sfile.sobolev_s)
        theory = theory_slope(*sfile.sobolev_s, pd.p, gd.gamma, regime);
      const RateReport rep =
        rate_experiment(sc, sfile.n_list, theory, rates_f.threads);
      json j = to_json(rep);
      j["scenario"] = scenario_to_json(sfile);
      detail::emit(j.dump(2), rates_f.output, out);
      if (rates_f.csv)
        atomic_write_file(*rates_f.csv, rates_csv(rep));
      return exit_ok;
    }
  } catch (const SchemaError& e) {
    err << "melfun: input error: " << e.what() << "\n";
    return exit_input;
  } catch (const DomainError& e) {
    err << "melfun: assumption violated: " << e.what() << "\n";
    return exit_assumption;
  } catch (const NumericError& e) {
    err << "melfun: numeric failure: " << e.what()
        << " (estimate " << e.estimate << ", bound " << e.error_bound << ")\n";
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "melfun: " << e.what() << "\n";
    return exit_input;
  }
  return exit_input;
}

} // namespace melfun::cli
