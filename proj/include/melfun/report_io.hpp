#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "melfun/adaptive.hpp"
#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/estimator.hpp"
#include "melfun/functionals.hpp"
#include "melfun/simulation.hpp"

namespace melfun {

using json = nlohmann::json;

//! Scenario file or flag violates the expected shape; `pointer` locates the
//! offending element in JSON-pointer syntax.
struct SchemaError : std::runtime_error
{
  SchemaError(const std::string& pointer_, const std::string& message)
    : std::runtime_error(pointer_ + ": " + message)
    , pointer(pointer_)
  {
  }
  std::string pointer;
};

//! Compact shell-safe distribution spec: name:param[:param...].
//! Accepted names: beta:b, gamma:d, weibull:m, lognormal:mu:lambda,
//! sloggamma:mu:a:lambda, exp (alias of gamma:1).
inline ErrorModel parse_error_model(const std::string& s)
{
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':'))
    parts.push_back(item);
  if (parts.empty())
    throw SchemaError("", "empty distribution spec");

  const auto num = [&](std::size_t i) -> double {
    try {
      std::size_t pos = 0;
      const double v = std::stod(parts.at(i), &pos);
      if (pos != parts[i].size())
        throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw SchemaError("", "bad numeric parameter '" +
                              (i < parts.size() ? parts[i] : "") + "' in '" +
                              s + "'");
    }
  };
  const auto arity = [&](std::size_t want) {
    if (parts.size() != want + 1)
      throw SchemaError("", "'" + parts[0] + "' takes " +
                              std::to_string(want) + " parameter(s), got " +
                              std::to_string(parts.size() - 1));
  };

  const std::string& name = parts[0];
  try {
    if (name == "beta") {
      arity(1);
      const double b = num(1);
      if (b != std::floor(b))
        throw SchemaError("", "beta parameter b must be an integer");
      return BetaModel(static_cast<int>(b));
    }
    if (name == "gamma") {
      arity(1);
      return GammaModel(num(1));
    }
    if (name == "exp") {
      arity(0);
      return GammaModel(1.0);
    }
    if (name == "weibull") {
      arity(1);
      return WeibullModel(num(1));
    }
    if (name == "lognormal") {
      arity(2);
      return LognormalModel(num(1), num(2));
    }
    if (name == "sloggamma") {
      arity(3);
      return ScaledLogGammaModel(num(1), num(2), num(3));
    }
  } catch (const DomainError& e) {
    throw SchemaError("", e.what());
  }
  throw SchemaError("", "unknown distribution '" + name +
                          "' (expected beta, gamma, exp, weibull, lognormal "
                          "or sloggamma)");
}

inline std::string spec_string(const ErrorModel& m)
{
  char buf[128];
  struct V
  {
    char* buf;
    std::string operator()(const BetaModel& g) const
    {
      std::snprintf(buf, 128, "beta:%d", g.b);
      return buf;
    }
    std::string operator()(const ScaledLogGammaModel& g) const
    {
      std::snprintf(buf, 128, "sloggamma:%.17g:%.17g:%.17g", g.mu, g.a,
                    g.lambda);
      return buf;
    }
    std::string operator()(const GammaModel& g) const
    {
      std::snprintf(buf, 128, "gamma:%.17g", g.d);
      return buf;
    }
    std::string operator()(const WeibullModel& g) const
    {
      std::snprintf(buf, 128, "weibull:%.17g", g.m);
      return buf;
    }
    std::string operator()(const LognormalModel& g) const
    {
      std::snprintf(buf, 128, "lognormal:%.17g:%.17g", g.mu, g.lambda);
      return buf;
    }
  };
  return std::visit(V{ buf }, m);
}

inline FunctionalSpec parse_functional(const std::string& kind, double x0)
{
  try {
    if (kind == "density")
      return DensityAt(x0);
    if (kind == "cdf")
      return CdfAt(x0);
    if (kind == "survival")
      return SurvivalAt(x0);
    if (kind == "laplace")
      return LaplaceAt(x0);
  } catch (const DomainError& e) {
    throw SchemaError("", e.what());
  }
  throw SchemaError("", "unknown functional '" + kind +
                          "' (expected density, cdf, survival or laplace)");
}

namespace detail {

inline const json& require_field(const json& j, const std::string& key,
                                 const std::string& pointer)
{
  if (!j.contains(key))
    throw SchemaError(pointer + "/" + key, "required field missing");
  return j.at(key);
}

inline double require_number(const json& j, const std::string& key,
                             const std::string& pointer)
{
  const json& v = require_field(j, key, pointer);
  if (!v.is_number())
    throw SchemaError(pointer + "/" + key, "expected a number");
  return v.get<double>();
}

inline std::string require_string(const json& j, const std::string& key,
                                  const std::string& pointer)
{
  const json& v = require_field(j, key, pointer);
  if (!v.is_string())
    throw SchemaError(pointer + "/" + key, "expected a string");
  return v.get<std::string>();
}

} // namespace detail

inline SelectionChoice selection_from_json(const json& j,
                                           const std::string& pointer)
{
  const std::string mode = detail::require_string(j, "mode", pointer);
  if (mode == "fixed_k") {
    const double k = detail::require_number(j, "k", pointer);
    if (!(k > 0.0))
      throw SchemaError(pointer + "/k", "cut-off must be positive");
    return FixedK{ k };
  }
  if (mode == "k_power") {
    KPower p;
    p.coeff = j.value("coeff", 1.0);
    p.exponent = detail::require_number(j, "exponent", pointer);
    return p;
  }
  if (mode == "oracle")
    return OracleK{};
  if (mode == "adaptive") {
    SelectionConfig cfg;
    cfg.chi = j.value("chi", 72.0);
    const std::string grid = j.value("grid", std::string("theoretical"));
    if (grid == "theoretical")
      cfg.grid_mode = SelectionConfig::GridMode::Theoretical;
    else if (grid == "practical")
      cfg.grid_mode = SelectionConfig::GridMode::Practical;
    else
      throw SchemaError(pointer + "/grid",
                        "expected 'theoretical' or 'practical'");
    if (j.contains("max_k"))
      cfg.max_k_override = j.at("max_k").get<int>();
    return cfg;
  }
  throw SchemaError(pointer + "/mode",
                    "expected fixed_k, k_power, oracle or adaptive");
}

inline json selection_to_json(const SelectionChoice& choice)
{
  struct V
  {
    json operator()(const FixedK& f) const
    {
      return { { "mode", "fixed_k" }, { "k", f.k } };
    }
    json operator()(const KPower& p) const
    {
      return { { "mode", "k_power" },
               { "coeff", p.coeff },
               { "exponent", p.exponent } };
    }
    json operator()(const OracleK&) const { return { { "mode", "oracle" } }; }
    json operator()(const SelectionConfig& c) const
    {
      json j = { { "mode", "adaptive" },
                 { "chi", c.chi },
                 { "grid",
                   c.grid_mode == SelectionConfig::GridMode::Theoretical
                     ? "theoretical"
                     : "practical" } };
      if (c.max_k_override)
        j["max_k"] = *c.max_k_override;
      return j;
    }
  };
  return std::visit(V{}, choice);
}

inline json functional_to_json(const FunctionalSpec& spec)
{
  struct V
  {
    json operator()(const DensityAt& f) const
    {
      return { { "kind", "density" }, { "x0", f.x0 } };
    }
    json operator()(const CdfAt& f) const
    {
      return { { "kind", "cdf" }, { "x0", f.x0 } };
    }
    json operator()(const SurvivalAt& f) const
    {
      return { { "kind", "survival" }, { "x0", f.x0 } };
    }
    json operator()(const LaplaceAt& f) const
    {
      return { { "kind", "laplace" }, { "x0", f.x0 } };
    }
    json operator()(const CustomPsi&) const
    {
      return { { "kind", "custom" } };
    }
  };
  return std::visit(V{}, spec);
}

//! Parse a scenario document. `want_n_list` selects the rates shape (field
//! n_list) over the single-size shape (field n).
struct ScenarioFile
{
  Scenario scenario;
  std::vector<long> n_list;              //!< rates documents only
  std::optional<double> sobolev_s;       //!< target smoothness, when given
};

inline ScenarioFile scenario_from_json(const json& j, bool want_n_list)
{
  if (!j.is_object())
    throw SchemaError("", "scenario document must be a JSON object");
  ScenarioFile out;
  Scenario& sc = out.scenario;

  try {
    sc.target = parse_error_model(detail::require_string(j, "target", ""));
  } catch (const SchemaError& e) {
    throw SchemaError("/target", e.what());
  }
  try {
    sc.error = parse_error_model(detail::require_string(j, "error", ""));
  } catch (const SchemaError& e) {
    throw SchemaError("/error", e.what());
  }

  const json& fj = detail::require_field(j, "functional", "");
  if (!fj.is_object())
    throw SchemaError("/functional", "expected an object");
  const std::string kind = detail::require_string(fj, "kind", "/functional");
  const double x0 = detail::require_number(fj, "x0", "/functional");
  try {
    sc.functional = parse_functional(kind, x0);
  } catch (const SchemaError& e) {
    throw SchemaError("/functional", e.what());
  }

  sc.c = detail::require_number(j, "c", "");
  if (want_n_list) {
    const json& nl = detail::require_field(j, "n_list", "");
    if (!nl.is_array() || nl.size() < 3)
      throw SchemaError("/n_list", "expected an array of >= 3 sample sizes");
    for (std::size_t i = 0; i < nl.size(); ++i) {
      if (!nl[i].is_number_integer() || nl[i].get<long>() < 1)
        throw SchemaError("/n_list/" + std::to_string(i),
                          "expected a positive integer");
      out.n_list.push_back(nl[i].get<long>());
    }
    sc.n = static_cast<int>(out.n_list.front());
  } else {
    const double n = detail::require_number(j, "n", "");
    if (n < 1 || n != std::floor(n))
      throw SchemaError("/n", "expected a positive integer");
    sc.n = static_cast<int>(n);
  }

  const double reps = detail::require_number(j, "replications", "");
  if (reps < 1 || reps != std::floor(reps))
    throw SchemaError("/replications", "expected a positive integer");
  sc.replications = static_cast<int>(reps);

  const json& seed = detail::require_field(j, "seed", "");
  if (!seed.is_number_integer() && !seed.is_number_unsigned())
    throw SchemaError("/seed", "expected a 64-bit integer");
  sc.seed = seed.get<std::uint64_t>();

  const json& sel = detail::require_field(j, "selection", "");
  if (!sel.is_object())
    throw SchemaError("/selection", "expected an object");
  sc.selection = selection_from_json(sel, "/selection");

  if (j.contains("sobolev_s"))
    out.sobolev_s = j.at("sobolev_s").get<double>();

  try {
    validate_scenario(sc);
  } catch (const DomainError&) {
    throw; // assumption violations keep their own exit path
  }
  return out;
}

inline json scenario_to_json(const ScenarioFile& sf)
{
  json j;
  j["target"] = spec_string(sf.scenario.target);
  j["error"] = spec_string(sf.scenario.error);
  j["functional"] = functional_to_json(sf.scenario.functional);
  j["c"] = sf.scenario.c;
  if (!sf.n_list.empty())
    j["n_list"] = sf.n_list;
  else
    j["n"] = sf.scenario.n;
  j["replications"] = sf.scenario.replications;
  j["seed"] = sf.scenario.seed;
  j["selection"] = selection_to_json(sf.scenario.selection);
  if (sf.sobolev_s)
    j["sobolev_s"] = *sf.sobolev_s;
  return j;
}

inline json to_json(const EstimateReport& r)
{
  return { { "theta_hat", r.theta_hat },
           { "k", r.k },
           { "delta_k", r.delta_k },
           { "regime", to_string(r.regime) },
           { "n", r.n },
           { "diagnostics",
             { { "grid_step", r.diagnostics.grid_step },
               { "grid_points", r.diagnostics.grid_points },
               { "elapsed_seconds", r.diagnostics.elapsed_seconds } } } };
}

inline json to_json(const SelectionReport& r)
{
  json per = json::array();
  for (const auto& row : r.per_k)
    per.push_back({ { "k", row.k },
                    { "theta_hat", row.theta },
                    { "v_hat", row.v_hat },
                    { "a_hat", row.a_hat } });
  return { { "k_hat", r.k_hat },
           { "theta_hat", r.theta_hat },
           { "sigma_hat", r.sigma_hat },
           { "grid", r.grid },
           { "per_k", per },
           { "fallback", r.fallback },
           { "certified", r.certified },
           { "chi", r.chi },
           { "grid_mode",
             r.grid_mode == SelectionConfig::GridMode::Theoretical
               ? "theoretical"
               : "practical" } };
}

inline json to_json(const RateReport& r)
{
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({ { "n", p.n }, { "mse", p.mse }, { "stderr", p.se } });
  json j = { { "points", pts },
             { "slope", r.slope },
             { "slope_ci", { r.slope_lo, r.slope_hi } } };
  if (std::isfinite(r.theory_slope))
    j["theory_slope"] = r.theory_slope;
  return j;
}

inline std::string format_g17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! Write atomically: the content lands under a temporary name and is moved
//! into place, so a crashed run never leaves a half-written report.
inline void atomic_write_file(const std::string& path,
                              const std::string& content)
{
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out.good())
      throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

//! Flat per-replication record emitted next to simulate reports.
struct ReplicationRow
{
  long n;
  int replication;
  double k;
  double theta_hat;
  double theta_true;
  double squared_error;
};

inline std::string replication_csv(const std::vector<ReplicationRow>& rows)
{
  std::string out = "n,replication,k,theta_hat,theta_true,squared_error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.replication) + "," +
           format_g17(r.k) + "," + format_g17(r.theta_hat) + "," +
           format_g17(r.theta_true) + "," + format_g17(r.squared_error) +
           "\n";
  }
  return out;
}

inline std::string rates_csv(const RateReport& rep)
{
  std::string out = "log_n,log_mse,stderr\n";
  for (const auto& p : rep.points) {
    out += format_g17(std::log(static_cast<double>(p.n))) + "," +
           format_g17(std::log(p.mse)) + "," + format_g17(p.se) + "\n";
  }
  return out;
}

} // namespace melfun
