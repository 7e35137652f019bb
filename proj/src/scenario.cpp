#include "nonlocal_flow/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "nonlocal_flow/csv_output.hpp"
#include "nonlocal_flow/dynamics.hpp"
#include "nonlocal_flow/errors.hpp"
#include "nonlocal_flow/lyapunov.hpp"

namespace nonlocal_flow {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Parsing.

namespace {

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

std::string key_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  return j;
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(key_path(path, key), "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

double get_positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) throw SchemaError(path, "must be positive");
  return v;
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
  return j.get<bool>();
}

std::vector<Atom> parse_atom_list(const json& arr, const std::string& path,
                                  const char* weight_key) {
  if (!arr.is_array()) throw SchemaError(path, "expected an array");
  if (arr.empty()) throw SchemaError(path, "must not be empty");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = index_path(path, i);
    const json& a = require_object(arr[i], p);
    reject_unknown_keys(a, p, {"value", weight_key});
    if (!a.contains("value")) throw SchemaError(key_path(p, "value"), "missing");
    if (!a.contains(weight_key)) throw SchemaError(key_path(p, weight_key), "missing");
    atoms.push_back({get_number(a["value"], key_path(p, "value")),
                     get_positive(a[weight_key], key_path(p, weight_key))});
  }
  return atoms;
}

std::function<double(double)> parse_function(const json& j,
                                             const std::string& path) {
  require_object(j, path);
  if (!j.contains("type") || !j["type"].is_string()) {
    throw SchemaError(key_path(path, "type"), "expected a string");
  }
  const std::string type = j["type"].get<std::string>();
  auto number_or = [&](const char* key, double fallback) {
    return j.contains(key) ? get_number(j[key], key_path(path, key)) : fallback;
  };
  if (type == "affine") {
    reject_unknown_keys(j, path, {"type", "intercept", "slope"});
    const double a = number_or("intercept", 0.0);
    const double b = number_or("slope", 1.0);
    return [a, b](double x) { return a + b * x; };
  }
  if (type == "power") {
    reject_unknown_keys(j, path, {"type", "offset", "scale", "exponent"});
    const double o = number_or("offset", 0.0);
    const double c = number_or("scale", 1.0);
    const double p = number_or("exponent", 1.0);
    return [o, c, p](double x) { return o + c * std::pow(x, p); };
  }
  if (type == "sine") {
    reject_unknown_keys(j, path,
                        {"type", "offset", "amplitude", "frequency", "phase"});
    const double o = number_or("offset", 0.0);
    const double amp = number_or("amplitude", 1.0);
    const double k = number_or("frequency", 1.0);
    const double ph = number_or("phase", 0.0);
    return [o, amp, k, ph](double x) {
      return o + amp * std::sin(2.0 * std::numbers::pi * k * x + ph);
    };
  }
  throw SchemaError(key_path(path, "type"),
                    "unknown function type '" + type +
                        "' (expected affine, power or sine)");
}

InitialDatumSpec parse_datum(const json& j, const std::string& path,
                             bool& sampled) {
  require_object(j, path);
  reject_unknown_keys(j, path, {"atoms", "pieces", "sampler"});
  const int kinds = static_cast<int>(j.contains("atoms")) +
                    static_cast<int>(j.contains("pieces")) +
                    static_cast<int>(j.contains("sampler"));
  if (kinds != 1) {
    throw SchemaError(path, "expected exactly one of atoms, pieces, sampler");
  }
  sampled = false;
  if (j.contains("atoms")) {
    return ExplicitAtoms{parse_atom_list(j["atoms"], key_path(path, "atoms"), "weight")};
  }
  if (j.contains("pieces")) {
    return PiecewiseConstant{parse_atom_list(j["pieces"], key_path(path, "pieces"), "measure")};
  }
  const std::string sp = key_path(path, "sampler");
  const json& s = require_object(j["sampler"], sp);
  reject_unknown_keys(s, sp, {"function", "interval", "n", "domain_measure"});
  AnalyticSampler out;
  if (!s.contains("function")) throw SchemaError(key_path(sp, "function"), "missing");
  out.u0 = parse_function(s["function"], key_path(sp, "function"));
  if (s.contains("interval")) {
    const std::string ip = key_path(sp, "interval");
    const json& iv = s["interval"];
    if (!iv.is_array() || iv.size() != 2) {
      throw SchemaError(ip, "expected [lo, hi]");
    }
    out.lo = get_number(iv[0], index_path(ip, 0));
    out.hi = get_number(iv[1], index_path(ip, 1));
    if (!(out.hi > out.lo)) throw SchemaError(ip, "requires lo < hi");
  }
  const std::string np = key_path(sp, "n");
  if (!s.contains("n")) throw SchemaError(np, "missing");
  if (!s["n"].is_number_integer() || s["n"].get<long long>() < 1) {
    throw SchemaError(np, "expected an integer >= 1");
  }
  out.n = s["n"].get<std::size_t>();
  out.domain_measure = s.contains("domain_measure")
                           ? get_positive(s["domain_measure"], key_path(sp, "domain_measure"))
                           : out.hi - out.lo;
  sampled = true;
  return out;
}

StepControl parse_control(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path,
                      {"abs_tol", "rel_tol", "h_init", "h_min", "h_max",
                       "t_max", "steady_tol", "denom_guard", "record_every"});
  StepControl c;
  auto set = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_positive(j[key], key_path(path, key));
  };
  set("abs_tol", c.abs_tol);
  set("rel_tol", c.rel_tol);
  set("h_init", c.h_init);
  set("h_min", c.h_min);
  set("h_max", c.h_max);
  set("t_max", c.t_max);
  if (j.contains("steady_tol")) {
    c.steady_tol = get_number(j["steady_tol"], key_path(path, "steady_tol"));
    if (c.steady_tol < 0.0) throw SchemaError(key_path(path, "steady_tol"), "must be >= 0");
  }
  set("denom_guard", c.denom_guard);
  set("record_every", c.record_every);
  if (!(c.h_min <= c.h_init && c.h_init <= c.h_max)) {
    throw SchemaError(path, "requires h_min <= h_init <= h_max");
  }
  return c;
}

CheckFlags parse_checks(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path,
                      {"mass", "interval", "lyapunov", "omega_limit",
                       "characteristic", "sandwich", "h2_uniqueness"});
  CheckFlags f;
  auto set = [&](const char* key, bool& field) {
    if (j.contains(key)) field = get_bool(j[key], key_path(path, key));
  };
  set("mass", f.mass);
  set("interval", f.interval);
  set("lyapunov", f.lyapunov);
  set("omega_limit", f.omega_limit);
  set("characteristic", f.characteristic);
  set("sandwich", f.sandwich);
  set("h2_uniqueness", f.h2_uniqueness);
  return f;
}

ScenarioConfig parse_scenario(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path,
                      {"name", "initial_datum", "control", "lyapunov",
                       "checks", "allow_no_hypothesis", "sandwich_eps",
                       "classify_tol", "characteristic_horizon",
                       "no_atom_condition"});
  ScenarioConfig cfg;
  const std::string np = key_path(path, "name");
  if (!j.contains("name") || !j["name"].is_string()) {
    throw SchemaError(np, "expected a string");
  }
  cfg.name = j["name"].get<std::string>();
  if (cfg.name.empty()) throw SchemaError(np, "must not be empty");
  if (cfg.name.find_first_of("/\\") != std::string::npos) {
    throw SchemaError(np, "must not contain path separators");
  }

  const std::string dp = key_path(path, "initial_datum");
  if (!j.contains("initial_datum")) throw SchemaError(dp, "missing");
  bool sampled = false;
  cfg.initial_datum = parse_datum(j["initial_datum"], dp, sampled);
  cfg.initial_datum_json = j["initial_datum"];
  cfg.no_atom_condition = sampled;
  if (j.contains("no_atom_condition")) {
    cfg.no_atom_condition = get_bool(j["no_atom_condition"], key_path(path, "no_atom_condition"));
  }

  if (j.contains("control")) cfg.control = parse_control(j["control"], key_path(path, "control"));

  cfg.lyapunov = lyapunov_catalog_names();
  if (j.contains("lyapunov")) {
    const std::string lp = key_path(path, "lyapunov");
    const json& arr = j["lyapunov"];
    if (!arr.is_array()) throw SchemaError(lp, "expected an array of names");
    cfg.lyapunov.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ep = index_path(lp, i);
      if (!arr[i].is_string()) throw SchemaError(ep, "expected a string");
      const std::string name = arr[i].get<std::string>();
      if (!lyapunov_catalog_entry(name)) {
        throw SchemaError(ep, "unknown lyapunov functional '" + name + "'");
      }
      if (std::find(cfg.lyapunov.begin(), cfg.lyapunov.end(), name) ==
          cfg.lyapunov.end()) {
        cfg.lyapunov.push_back(name);
      }
    }
  }

  if (j.contains("checks")) cfg.checks = parse_checks(j["checks"], key_path(path, "checks"));
  if (j.contains("allow_no_hypothesis")) {
    cfg.allow_no_hypothesis = get_bool(j["allow_no_hypothesis"], key_path(path, "allow_no_hypothesis"));
  }
  if (j.contains("sandwich_eps")) {
    cfg.sandwich_eps = get_number(j["sandwich_eps"], key_path(path, "sandwich_eps"));
    if (cfg.sandwich_eps < 0.0) {
      throw SchemaError(key_path(path, "sandwich_eps"), "must be >= 0");
    }
  }
  if (j.contains("classify_tol")) {
    cfg.classify_tol = get_positive(j["classify_tol"], key_path(path, "classify_tol"));
  }
  if (j.contains("characteristic_horizon")) {
    cfg.characteristic_horizon = get_positive(
        j["characteristic_horizon"], key_path(path, "characteristic_horizon"));
  }
  return cfg;
}

}  // namespace

std::vector<ScenarioConfig> parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("$", "expected a top-level object");
  reject_unknown_keys(doc, "", {"scenarios"});
  if (!doc.contains("scenarios") || !doc["scenarios"].is_array()) {
    throw SchemaError("scenarios", "expected an array");
  }
  std::vector<ScenarioConfig> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc["scenarios"].size(); ++i) {
    const std::string p = index_path("scenarios", i);
    out.push_back(parse_scenario(doc["scenarios"][i], p));
    if (!names.insert(out.back().name).second) {
      throw SchemaError(key_path(p, "name"), "duplicate scenario name '" + out.back().name + "'");
    }
  }
  return out;
}

std::vector<ScenarioConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Checks.

namespace {

constexpr double kIntervalSlack = 1e-9;

CheckResult not_applicable(std::string name, std::string claim,
                           std::string reason) {
  CheckResult c{std::move(name), std::move(claim), false, true, json::object()};
  c.details["skipped"] = std::move(reason);
  return c;
}

CheckResult check_mass(const TrajectoryRecord& rec) {
  CheckResult c{"mass", "the integral of u is conserved in time"};
  const double m0 = rec.mass_series.front();
  double worst = 0.0;
  for (double m : rec.mass_series) worst = std::max(worst, std::abs(m - m0));
  const double bound = 1e-8 * (1.0 + std::abs(m0));
  c.ok = worst <= bound;
  c.details = {{"mass0", m0}, {"max_drift", worst}, {"bound", bound}};
  return c;
}

std::vector<CheckResult> check_interval(const Ensemble& e0,
                                        const HypothesisClass& hyp,
                                        const TrajectoryRecord& rec) {
  std::vector<CheckResult> out;

  CheckResult inv{"interval_invariance",
                  "u(x, t) stays in the invariant interval I_i"};
  double worst = 0.0;
  for (const auto& s : rec.snapshots) {
    for (double v : s.values()) {
      worst = std::max({worst, hyp.interval_lo - v, v - hyp.interval_hi});
    }
  }
  inv.ok = worst <= kIntervalSlack;
  inv.details = {{"interval", {hyp.interval_lo, hyp.interval_hi}},
                 {"max_excursion", worst}};
  out.push_back(std::move(inv));

  CheckResult lam{"lambda_containment", "lambda(t) stays in I_i"};
  double lworst = 0.0;
  for (double l : rec.lambda_series) {
    lworst = std::max({lworst, hyp.interval_lo - l, l - hyp.interval_hi});
  }
  lam.ok = lworst <= kIntervalSlack;
  lam.details = {{"max_excursion", lworst}};
  out.push_back(std::move(lam));

  CheckResult eq{"equilibrium_preservation",
                 "atoms starting exactly at 0 or 1 never move"};
  std::size_t watched = 0;
  std::size_t moved = 0;
  for (std::size_t i = 0; i < e0.size(); ++i) {
    const double v0 = e0.values()[i];
    if (v0 != 0.0 && v0 != 1.0) continue;
    ++watched;
    const auto bits = std::bit_cast<std::uint64_t>(v0);
    for (const auto& s : rec.snapshots) {
      if (std::bit_cast<std::uint64_t>(s.values()[i]) != bits) {
        ++moved;
        break;
      }
    }
  }
  eq.ok = moved == 0;
  eq.details = {{"watched_atoms", watched}, {"moved_atoms", moved}};
  out.push_back(std::move(eq));

  if (hyp.tag == Hypothesis::H1 || hyp.tag == Hypothesis::H3) {
    const bool h1 = hyp.tag == Hypothesis::H1;
    CheckResult sign{"sign_preservation",
                     h1 ? "atoms starting above 1 stay above 1"
                        : "atoms starting below 0 stay below 0"};
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e0.size(); ++i) {
      const double v0 = e0.values()[i];
      if (h1 ? !(v0 > 1.0) : !(v0 < 0.0)) continue;
      for (const auto& s : rec.snapshots) {
        const double v = s.values()[i];
        closest = std::min(closest, h1 ? v - 1.0 : -v);
      }
    }
    sign.ok = !(closest <= -1e-12);
    sign.details = {{"min_distance_past_threshold",
                     std::isfinite(closest) ? json(closest) : json(nullptr)}};
    out.push_back(std::move(sign));
  }
  return out;
}

std::vector<CheckResult> check_lyapunov(const ScenarioConfig& cfg,
                                        const HypothesisClass& hyp,
                                        const TrajectoryRecord& rec) {
  std::vector<CheckResult> out;
  const std::string claim =
      "sign * integral Phi(u) is non-increasing when Phi' is non-decreasing on I_i";
  for (const auto& name : cfg.lyapunov) {
    const auto spec = signed_for(*lyapunov_catalog_entry(name), hyp);
    const std::string check_name = "lyapunov_" + name;
    if (!phi_prime_nondecreasing(spec, hyp)) {
      out.push_back(not_applicable(check_name, claim,
                                   "Phi' is not non-decreasing on I_i"));
      continue;
    }
    const NamedSeries* series = rec.lyapunov(name);
    CheckResult c{check_name, claim};
    const double e0 = series->values.front();
    const double slack = 1e-7 * (1.0 + std::abs(e0));
    const MonotoneReport m = check_monotone(series->values, slack);
    c.ok = m.ok;
    c.details = {{"sign", spec.sign},
                 {"E0", e0},
                 {"E_final", series->values.back()},
                 {"worst_violation", m.worst_violation},
                 {"slack", slack}};
    out.push_back(std::move(c));
  }
  return out;
}

json buckets_json(const std::vector<Bucket>& buckets) {
  json arr = json::array();
  for (Bucket b : buckets) arr.push_back(to_string(b));
  return arr;
}

CheckResult check_omega_h1_h3(const ScenarioConfig& cfg, const Ensemble& e0,
                              const HypothesisClass& hyp,
                              const OmegaPrediction& pred,
                              const TrajectoryRecord& rec) {
  const bool h1 = hyp.tag == Hypothesis::H1;
  CheckResult c{"omega_limit",
                h1 ? "u converges to 1 on {u0 = 1} and to lambda_inf on {u0 > 1}, "
                     "|{u0 = 1}| + lambda_inf |{u0 > 1}| = integral u0, lambda_inf > 1"
                   : "u converges to lambda_inf on {u0 < 0} and stays 0 elsewhere, "
                     "lambda_inf |{u0 < 0}| = integral u0, lambda_inf < 0"};
  const Ensemble& fin = rec.final_state();
  const double lam_pred = *pred.lambda_infinity;
  const double lam_final = rec.lambda_series.back();

  double worst = 0.0;
  for (std::size_t i = 0; i < e0.size(); ++i) {
    const double level = *pred.level_for(e0.values()[i]);
    worst = std::max(worst, std::abs(fin.values()[i] - level));
  }
  const bool converged = rec.termination == Termination::SteadyState;
  const bool values_ok = worst <= 1e-5;
  const bool lambda_ok = std::abs(lam_final - lam_pred) <= 1e-6;
  const bool sign_ok = h1 ? lam_final > 1.0 + 1e-6 : lam_final < -1e-6;

  const auto buckets = classify_terminal(fin, lam_pred, cfg.classify_tol);
  bool buckets_ok = true;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const double v0 = e0.values()[i];
    const bool fixed = h1 ? v0 == 1.0 : v0 == 0.0;
    const Bucket expected = fixed ? (h1 ? Bucket::One : Bucket::Zero)
                                  : Bucket::LambdaInf;
    // lambda_inf can sit within tol of the fixed level; such atoms are
    // Ambiguous by construction and are judged by the value test alone.
    if (buckets[i] != expected && buckets[i] != Bucket::Ambiguous) {
      buckets_ok = false;
    }
  }

  c.details = {{"termination", to_string(rec.termination)},
               {"lambda_inf_predicted", lam_pred},
               {"lambda_final", lam_final},
               {"max_value_error", worst},
               {"buckets", buckets_json(buckets)}};

  bool limits_ok = true;
  if (rec.size() >= 10) {
    const LimitEstimate lim = estimate_limits(rec);
    c.details["l_g"] = lim.l_g;
    c.details["l_f"] = lim.l_f;
    c.details["limits_converged"] = lim.converged;
    if (std::abs(lim.l_g) > 1e-6) {
      const double ratio_gap = std::abs(lim.l_f / lim.l_g - lam_final);
      c.details["ratio_gap"] = ratio_gap;
      limits_ok = ratio_gap <= 1e-8;
    }
    limits_ok = limits_ok && lim.l_g < 0.0 && (h1 || lim.l_f > 0.0);
  } else {
    c.details["limits"] = "fewer than 10 samples; limit estimate skipped";
  }

  c.ok = converged && values_ok && lambda_ok && sign_ok && buckets_ok && limits_ok;
  return c;
}

std::vector<CheckResult> check_h2(const ScenarioConfig& cfg,
                                  const Ensemble& e0,
                                  const TrajectoryRecord& rec,
                                  bool want_omega, bool want_uniqueness) {
  std::vector<CheckResult> out;
  const Ensemble& fin = rec.final_state();
  const double lam_trace = rec.lambda_series.back();
  const auto buckets = classify_terminal(fin, lam_trace, cfg.classify_tol);
  const LambdaParts parts = lambda_parts(fin.values(), fin.weights());

  if (want_omega) {
    CheckResult c{"omega_limit",
                  "without atoms in (0, 1), integral g(u) and integral f(u) tend "
                  "to 0 and every point converges to 0 or 1"};
    c.details = {{"termination", to_string(rec.termination)},
                 {"lambda_trace", lam_trace},
                 {"lambda_note", "trace value, no convergence claim"},
                 {"integral_g_final", parts.denominator},
                 {"integral_f_final", parts.numerator},
                 {"buckets", buckets_json(buckets)}};
    if (!cfg.no_atom_condition) {
      c.applicable = false;
      c.details["skipped"] =
          "datum has atoms in (0, 1); the limit is not characterized";
    } else {
      bool buckets_ok = true;
      for (Bucket b : buckets) {
        if (b == Bucket::LambdaInf) buckets_ok = false;
      }
      c.ok = std::abs(parts.denominator) <= 1e-4 &&
             std::abs(parts.numerator) <= 1e-4 && buckets_ok;
    }
    out.push_back(std::move(c));
  }

  if (want_uniqueness) {
    const std::string claim =
        "at most one initial value converges to an interior lambda_inf";
    if (!(lam_trace > 0.0 && lam_trace < 1.0)) {
      out.push_back(not_applicable("h2_uniqueness", claim,
                                   "final lambda is not in (0, 1)"));
    } else {
      CheckResult c{"h2_uniqueness", claim};
      const UniquenessReport u = check_h2_uniqueness(e0, buckets, lam_trace);
      c.ok = u.ok;
      c.details = {{"lambda_trace", lam_trace},
                   {"offending_values", u.offending_values}};
      out.push_back(std::move(c));
    }
  }
  return out;
}

// Distinct initial values, first atom index for each.
std::vector<std::size_t> representative_atoms(const Ensemble& e0) {
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < e0.size(); ++i) {
    bool seen = false;
    for (std::size_t j : reps) seen = seen || e0.values()[j] == e0.values()[i];
    if (!seen) reps.push_back(i);
  }
  return reps;
}

CheckResult check_characteristic(const ScenarioConfig& cfg, const Ensemble& e0,
                                 const TrajectoryRecord& rec) {
  CheckResult c{"characteristic",
                "u(x, t) = Y(t; u0(x)) for the scalar characteristic equation"};
  const double horizon = std::min(rec.times.back(), cfg.characteristic_horizon);
  std::size_t count = 0;
  while (count < rec.size() && rec.times[count] <= horizon) ++count;
  if (count < 2) {
    c.applicable = false;
    c.details["skipped"] = "fewer than two recorded samples";
    return c;
  }
  const PiecewiseLinear lambda(
      std::vector<double>(rec.times.begin(), rec.times.begin() + static_cast<long>(count)),
      std::vector<double>(rec.lambda_series.begin(),
                          rec.lambda_series.begin() + static_cast<long>(count)));
  StepControl tight = cfg.control;
  tight.abs_tol = 1e-12;
  tight.rel_tol = 1e-10;
  tight.h_min = std::min(tight.h_min, 1e-14);
  tight.h_init = std::max(tight.h_min, std::min(tight.h_init, 1e-4));

  double worst = 0.0;
  for (std::size_t i : representative_atoms(e0)) {
    const ScalarTrajectory y = solve_characteristic(e0.values()[i], lambda, tight);
    for (std::size_t k = 0; k < count; ++k) {
      worst = std::max(worst, std::abs(y.values[k] - rec.snapshots[k].values()[i]));
    }
  }
  c.ok = worst <= 1e-5;
  c.details = {{"horizon", horizon},
               {"samples", count},
               {"sup_gap", worst},
               {"bound", 1e-5}};
  return c;
}

CheckResult check_sandwich(const ScenarioConfig& cfg, const Ensemble& e0,
                           const HypothesisClass& hyp,
                           const TrajectoryRecord& rec) {
  CheckResult c{"sandwich",
                "once lambda is within eps of its limit, each moving "
                "characteristic lies between the autonomous solutions with "
                "lambda_inf - eps and lambda_inf + eps"};
  if (rec.size() < 2) {
    c.applicable = false;
    c.details["skipped"] = "fewer than two recorded samples";
    return c;
  }
  const bool h1 = hyp.tag == Hypothesis::H1;
  json per_atom = json::array();
  bool ok = true;
  for (std::size_t i : representative_atoms(e0)) {
    const double v0 = e0.values()[i];
    if (h1 ? !(v0 > 1.0) : !(v0 < 0.0)) continue;
    const ScalarTrajectory y{rec.times, rec.atom_series(i)};
    try {
      const SandwichReport s = sandwich_check(y, rec.lambda_series, cfg.sandwich_eps);
      ok = ok && s.ok;
      per_atom.push_back({{"initial_value", v0},
                          {"ok", s.ok},
                          {"t_eps", s.t_eps},
                          {"min_lower_margin", s.min_lower_margin},
                          {"min_upper_margin", s.min_upper_margin}});
    } catch (const NoSettlingTime& e) {
      ok = false;
      per_atom.push_back({{"initial_value", v0}, {"ok", false}, {"error", e.what()}});
    }
  }
  c.ok = ok;
  c.details = {{"eps", cfg.sandwich_eps}, {"atoms", per_atom}};
  return c;
}

json prediction_json(const OmegaPrediction& p) {
  json pieces = json::array();
  for (const auto& pc : p.pieces) {
    pieces.push_back({{"level", pc.level}, {"measure", pc.measure}});
  }
  return {{"kind", to_string(p.kind)},
          {"lambda_infinity",
           p.lambda_infinity ? json(*p.lambda_infinity) : json("Unknown")},
          {"pieces", pieces}};
}

json hypothesis_json(const HypothesisClass& h) {
  return {{"tag", to_string(h.tag)},
          {"interval", {h.interval_lo, h.interval_hi}}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

bool ScenarioReport::ok() const {
  if (error) return false;
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.ok; });
}

json ScenarioReport::to_json() const {
  json j;
  j["name"] = name;
  j["ok"] = ok();
  if (error) j["error"] = *error;
  if (hypothesis) j["hypothesis"] = hypothesis_json(*hypothesis);
  if (prediction) j["prediction"] = prediction_json(*prediction);
  if (record) {
    const auto& r = *record;
    j["termination"] = to_string(r.termination);
    if (!r.times.empty()) {
      j["final_time"] = r.times.back();
      j["final_lambda"] = r.lambda_series.back();
      j["samples"] = r.size();
      json finals = json::array();
      for (double v : r.final_state().values()) finals.push_back(v);
      j["final_values"] = finals;
    }
  }
  json checks_json = json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name},
                           {"claim", c.claim},
                           {"applicable", c.applicable},
                           {"ok", c.ok},
                           {"details", c.details}});
  }
  j["checks"] = checks_json;
  return j;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir) {
  ScenarioReport report;
  report.name = cfg.name;
  try {
    const Ensemble e0 = build_ensemble(cfg.initial_datum);
    std::optional<HypothesisClass> hyp;
    try {
      hyp = validate_hypothesis(e0);
    } catch (const NoHypothesis&) {
      if (!cfg.allow_no_hypothesis) throw;
    }
    report.hypothesis = hyp;

    std::vector<LyapunovSpec> specs;
    if (hyp) {
      report.prediction = predict_omega_limit(e0, *hyp);
      for (const auto& name : cfg.lyapunov) {
        auto spec = signed_for(*lyapunov_catalog_entry(name), *hyp);
        if (phi_prime_nondecreasing(spec, *hyp)) specs.push_back(std::move(spec));
      }
    }
    report.record = evolve(e0, cfg.control, specs, /*require_hypothesis=*/false);
    const TrajectoryRecord& rec = *report.record;
    if (rec.times.empty()) {
      throw DenominatorVanishes(0.0, cfg.control.denom_guard * e0.domain_measure());
    }

    const CheckFlags& f = cfg.checks;
    if (f.mass) report.checks.push_back(check_mass(rec));
    if (hyp) {
      if (f.interval) {
        for (auto& c : check_interval(e0, *hyp, rec)) report.checks.push_back(std::move(c));
      }
      if (f.lyapunov) {
        for (auto& c : check_lyapunov(cfg, *hyp, rec)) report.checks.push_back(std::move(c));
      }
      if (hyp->tag == Hypothesis::H2) {
        for (auto& c : check_h2(cfg, e0, rec, f.omega_limit, f.h2_uniqueness)) {
          report.checks.push_back(std::move(c));
        }
      } else if (f.omega_limit) {
        report.checks.push_back(check_omega_h1_h3(cfg, e0, *hyp, *report.prediction, rec));
      }
      if (f.characteristic) report.checks.push_back(check_characteristic(cfg, e0, rec));
      if (f.sandwich) {
        if (hyp->tag == Hypothesis::H2) {
          report.checks.push_back(not_applicable(
              "sandwich", "comparison bracket for converging characteristics",
              "no lambda limit is asserted under H2"));
        } else {
          report.checks.push_back(check_sandwich(cfg, e0, *hyp, rec));
        }
      }
    } else if (f.characteristic) {
      report.checks.push_back(check_characteristic(cfg, e0, rec));
    }
  } catch (const FlowError& e) {
    report.error = e.what();
  } catch (const std::invalid_argument& e) {
    report.error = e.what();
  }

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    if (report.record && !report.record->times.empty()) {
      emit_csv(*report.record, *out_dir / (cfg.name + ".csv"));
    }
    write_text(*out_dir / (cfg.name + ".report.json"), report.to_json().dump(2) + "\n");
  }
  return report;
}

json predict_scenario(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  try {
    const Ensemble e0 = build_ensemble(cfg.initial_datum);
    const HypothesisClass hyp = validate_hypothesis(e0);
    j["hypothesis"] = hypothesis_json(hyp);
    j["mass"] = mass(e0);
    j["prediction"] = prediction_json(predict_omega_limit(e0, hyp));
  } catch (const FlowError& e) {
    j["error"] = e.what();
  }
  return j;
}

std::vector<ScenarioReport> run_scenarios(
    const std::vector<ScenarioConfig>& configs,
    const std::optional<std::filesystem::path>& out_dir, unsigned threads) {
  std::vector<ScenarioReport> reports(configs.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(configs.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      reports[i] = run_scenario(configs[i], out_dir);
    }
    return reports;
  }
  if (out_dir) std::filesystem::create_directories(*out_dir);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          reports[i] = run_scenario(configs[i], out_dir);
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return reports;
}

unsigned thread_budget() {
  if (const char* env = std::getenv("NONLOCAL_FLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace nonlocal_flow
