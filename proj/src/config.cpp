#include "spinxfer/cli.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace spinxfer::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kScenarioKeys{"protocol",     "N",           "J",          "Delta",
                                          "temperature",  "gamma",       "mit_outcome_policy",
                                          "t_max_window", "sample_step", "variant",    "propagator",
                                          "lindblad"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.get<std::string>();
}

std::optional<double> optional_number(const json& j, const std::string& key) {
  if (j.is_null()) return std::nullopt;
  return number(j, key);
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "mit") return Protocol::Mit;
  if (s == "attach") return Protocol::Attach;
  throw ConfigError("protocol must be 'mit' or 'attach', got '" + s + "'");
}

OutcomePolicy policy_from_string(const std::string& s) {
  if (s == "outcome0") return OutcomePolicy::Outcome0;
  if (s == "outcome1") return OutcomePolicy::Outcome1;
  if (s == "weighted") return OutcomePolicy::ProbabilityWeighted;
  throw ConfigError("mit_outcome_policy must be outcome0, outcome1 or weighted, got '" + s + "'");
}

FidelityVariant variant_from_string(const std::string& s) {
  if (s == "abs") return FidelityVariant::Abs;
  if (s == "re") return FidelityVariant::Re;
  throw ConfigError("variant must be 'abs' or 're', got '" + s + "'");
}

json optional_to_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

ScenarioSpec scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  reject_unknown(j, kScenarioKeys, "scenario");
  ScenarioSpec spec;
  if (j.contains("protocol")) spec.protocol = protocol_from_string(text(j["protocol"], "protocol"));
  if (j.contains("N")) spec.chain.sites = integer(j["N"], "N");
  if (j.contains("J")) spec.chain.coupling = number(j["J"], "J");
  if (j.contains("Delta")) spec.chain.anisotropy = number(j["Delta"], "Delta");
  if (j.contains("temperature")) spec.temperature = optional_number(j["temperature"], "temperature");
  if (j.contains("gamma")) spec.gamma = optional_number(j["gamma"], "gamma");
  if (j.contains("mit_outcome_policy")) {
    spec.mit_outcome_policy = policy_from_string(text(j["mit_outcome_policy"], "mit_outcome_policy"));
  }
  if (j.contains("t_max_window")) spec.grid.window = optional_number(j["t_max_window"], "t_max_window");
  if (j.contains("sample_step")) spec.grid.sample_step = number(j["sample_step"], "sample_step");
  if (j.contains("variant")) spec.variant = variant_from_string(text(j["variant"], "variant"));
  if (j.contains("propagator")) {
    const json& p = j["propagator"];
    if (!p.is_object()) throw ConfigError("'propagator' must be an object");
    reject_unknown(p, {"method", "krylov_dim", "krylov_tol"}, "propagator");
    if (p.contains("method")) {
      const std::string m = text(p["method"], "propagator.method");
      if (m == "krylov") {
        spec.propagator.method = PropagatorConfig::Method::Krylov;
      } else if (m == "dense") {
        spec.propagator.method = PropagatorConfig::Method::DenseEig;
      } else {
        throw ConfigError("propagator.method must be 'krylov' or 'dense', got '" + m + "'");
      }
    }
    if (p.contains("krylov_dim")) spec.propagator.krylov_dim = integer(p["krylov_dim"], "propagator.krylov_dim");
    if (p.contains("krylov_tol")) spec.propagator.krylov_tol = number(p["krylov_tol"], "propagator.krylov_tol");
  }
  if (j.contains("lindblad")) {
    const json& l = j["lindblad"];
    if (!l.is_object()) throw ConfigError("'lindblad' must be an object");
    reject_unknown(l, {"dt", "hermitize_each_step", "trace_drift_tol"}, "lindblad");
    if (l.contains("dt")) spec.lindblad.dt = number(l["dt"], "lindblad.dt");
    if (l.contains("hermitize_each_step")) {
      if (!l["hermitize_each_step"].is_boolean()) throw ConfigError("'lindblad.hermitize_each_step' must be a boolean");
      spec.lindblad.hermitize_each_step = l["hermitize_each_step"].get<bool>();
    }
    if (l.contains("trace_drift_tol")) spec.lindblad.trace_drift_tol = number(l["trace_drift_tol"], "lindblad.trace_drift_tol");
  }
  return spec;
}

json scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["protocol"] = to_string(spec.protocol);
  j["N"] = spec.chain.sites;
  j["J"] = spec.chain.coupling;
  j["Delta"] = spec.chain.anisotropy;
  j["temperature"] = optional_to_json(spec.temperature);
  j["gamma"] = optional_to_json(spec.gamma);
  j["mit_outcome_policy"] = to_string(spec.mit_outcome_policy);
  j["t_max_window"] = spec.grid.resolved_window(spec.chain);
  j["sample_step"] = spec.grid.sample_step;
  j["variant"] = to_string(spec.variant);
  j["propagator"] = {
      {"method", spec.propagator.method == PropagatorConfig::Method::Krylov ? "krylov" : "dense"},
      {"krylov_dim", spec.propagator.krylov_dim},
      {"krylov_tol", spec.propagator.krylov_tol}};
  j["lindblad"] = {{"dt", spec.lindblad.dt},
                   {"hermitize_each_step", spec.lindblad.hermitize_each_step},
                   {"trace_drift_tol", spec.lindblad.trace_drift_tol}};
  return j;
}

Axis axis_from_string(const std::string& name) {
  if (name == "delta") return Axis::Delta;
  if (name == "length") return Axis::Length;
  if (name == "temperature") return Axis::Temperature;
  if (name == "gamma") return Axis::Gamma;
  throw ConfigError("axis must be one of delta, length, temperature, gamma; got '" + name + "'");
}

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::Delta:
      return "delta";
    case Axis::Length:
      return "length";
    case Axis::Temperature:
      return "temperature";
    case Axis::Gamma:
      return "gamma";
  }
  return "delta";
}

std::vector<double> expand_range(double start, double stop, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("grid step must be > 0");
  if (!(stop >= start)) throw ConfigError("grid stop must be >= start");
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  for (long k = 0; k <= count; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

std::vector<ScenarioSpec> SweepConfig::expand() const {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (protocols.empty()) throw ConfigError("sweep needs at least one protocol");
  std::vector<ScenarioSpec> out;
  for (const double value : grid) {
    for (const Protocol p : protocols) {
      ScenarioSpec s = base;
      s.protocol = p;
      switch (axis) {
        case Axis::Delta:
          s.chain.anisotropy = value;
          break;
        case Axis::Length:
          if (value != std::floor(value)) throw ConfigError("length grid needs integers, got " + format_number(value));
          s.chain.sites = static_cast<int>(value);
          break;
        case Axis::Temperature:
          s.temperature = value;
          break;
        case Axis::Gamma:
          s.gamma = value;
          break;
      }
      try {
        s.validate();
      } catch (const DomainError& e) {
        throw ConfigError(std::string("grid point ") + to_string(axis) + "=" + format_number(value) + ": " +
                          e.what());
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

SweepConfig sweep_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"scenario", "sweep", "workers", "outputs"}, "config");
  SweepConfig cfg;
  if (j.contains("scenario")) cfg.base = scenario_from_json(j["scenario"]);
  cfg.protocols = {cfg.base.protocol};
  if (j.contains("workers")) {
    const int w = integer(j["workers"], "workers");
    if (w < 1) throw ConfigError("'workers' must be >= 1");
    cfg.workers = static_cast<unsigned>(w);
  }
  if (j.contains("outputs")) cfg.outputs = text(j["outputs"], "outputs");
  if (!j.contains("sweep")) return cfg;
  const json& s = j["sweep"];
  if (!s.is_object()) throw ConfigError("'sweep' must be an object");
  reject_unknown(s, {"axis", "grid", "protocols"}, "sweep");
  if (!s.contains("axis")) throw ConfigError("sweep.axis is required");
  cfg.axis = axis_from_string(text(s["axis"], "sweep.axis"));
  if (!s.contains("grid")) throw ConfigError("sweep.grid is required");
  const json& g = s["grid"];
  if (g.is_array()) {
    for (const auto& v : g) cfg.grid.push_back(number(v, "sweep.grid[]"));
  } else if (g.is_object()) {
    reject_unknown(g, {"start", "stop", "step"}, "sweep.grid");
    for (const char* k : {"start", "stop", "step"}) {
      if (!g.contains(k)) throw ConfigError(std::string("sweep.grid.") + k + " is required");
    }
    cfg.grid = expand_range(number(g["start"], "sweep.grid.start"), number(g["stop"], "sweep.grid.stop"),
                            number(g["step"], "sweep.grid.step"));
  } else {
    throw ConfigError("sweep.grid must be a list or {start, stop, step}");
  }
  if (cfg.grid.empty()) throw ConfigError("sweep grid is empty");
  if (s.contains("protocols")) {
    if (!s["protocols"].is_array()) throw ConfigError("sweep.protocols must be a list");
    cfg.protocols.clear();
    for (const auto& p : s["protocols"]) cfg.protocols.push_back(protocol_from_string(text(p, "sweep.protocols[]")));
  }
  return cfg;
}

}  // namespace spinxfer::cli
