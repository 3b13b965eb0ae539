#include "spinxfer/cli.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace spinxfer::cli {

using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::string> protocol;
  std::optional<int> sites;
  std::optional<double> coupling;
  std::optional<double> delta;
  std::optional<double> temperature;
  std::optional<double> gamma;
  std::optional<std::string> policy;
  std::optional<std::string> variant;
  std::optional<double> window;
  std::optional<double> sample_step;
  std::optional<std::string> axis;
  std::optional<std::string> grid;
  std::optional<std::string> protocols;
};

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// Flag values land in the JSON tree so they go through the same parser.
void apply_overrides(const Overrides& o, json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  json& s = config["scenario"];
  if (s.is_null()) s = json::object();
  if (o.protocol) s["protocol"] = *o.protocol;
  if (o.sites) s["N"] = *o.sites;
  if (o.coupling) s["J"] = *o.coupling;
  if (o.delta) s["Delta"] = *o.delta;
  if (o.temperature) s["temperature"] = *o.temperature;
  if (o.gamma) s["gamma"] = *o.gamma;
  if (o.policy) s["mit_outcome_policy"] = *o.policy;
  if (o.variant) s["variant"] = *o.variant;
  if (o.window) s["t_max_window"] = *o.window;
  if (o.sample_step) s["sample_step"] = *o.sample_step;
  if (o.axis || o.grid || o.protocols) {
    json& w = config["sweep"];
    if (w.is_null()) w = json::object();
    if (o.axis) w["axis"] = *o.axis;
    if (o.protocols) {
      json list = json::array();
      std::stringstream ss(*o.protocols);
      for (std::string item; std::getline(ss, item, ',');) list.push_back(item);
      w["protocols"] = list;
    }
    if (o.grid) {
      // "start:stop:step" or "a,b,c"
      const std::string& g = *o.grid;
      try {
        if (g.find(':') != std::string::npos) {
          std::stringstream ss(g);
          std::string a, b, c;
          std::getline(ss, a, ':');
          std::getline(ss, b, ':');
          std::getline(ss, c, ':');
          w["grid"] = {{"start", std::stod(a)}, {"stop", std::stod(b)}, {"step", std::stod(c)}};
        } else {
          json list = json::array();
          std::stringstream ss(g);
          for (std::string item; std::getline(ss, item, ',');) list.push_back(std::stod(item));
          w["grid"] = list;
        }
      } catch (const std::logic_error&) {
        throw ConfigError("--grid must be start:stop:step or a comma list of numbers, got '" + g + "'");
      }
    }
  }
}

ScenarioSpec checked_scenario(const json& config) {
  ScenarioSpec spec = config.contains("scenario") ? scenario_from_json(config["scenario"]) : ScenarioSpec{};
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << content;
}

int cmd_trace(const json& config, const std::filesystem::path& out) {
  const ScenarioSpec spec = checked_scenario(config);
  const ScenarioResult result = run_scenario(spec);
  std::filesystem::create_directories(out);
  std::ostringstream trace;
  write_trace_csv(trace, result);
  write_file(out / "trace.csv", trace.str());
  write_file(out / "summary.json", summary_json(result).dump(2) + "\n");
  const Peak& p = *result.trace.peak;
  std::cout << "t_max=" << format_number(p.t_max) << " F_max=" << format_number(p.f_max) << "\n";
  return kExitOk;
}

int cmd_sweep(const json& config, const std::optional<std::string>& out, std::optional<unsigned> workers) {
  if (!config.contains("sweep")) throw ConfigError("sweep needs a 'sweep' section or --axis/--grid");
  SweepConfig cfg = sweep_from_json(config);
  if (out) cfg.outputs = *out;
  if (workers) cfg.workers = *workers;
  const auto specs = cfg.expand();  // caps checked before any work
  const auto rows = run_rows(specs, cfg.workers);
  std::filesystem::create_directories(cfg.outputs);
  std::ostringstream results;
  write_results_csv(results, rows);
  write_file(cfg.outputs / "results.csv", results.str());
  std::ostringstream timing;
  write_timing_csv(timing, rows);
  write_file(cfg.outputs / "timing.csv", timing.str());
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
  std::cout << rows.size() << " rows, " << failed << " failed\n";
  return failed ? kExitNumerical : kExitOk;
}

int cmd_figure(const std::string& name, const std::filesystem::path& out, unsigned workers) {
  const FigureRecipe recipe = figure_recipe(name);
  std::cout << name << ": " << recipe.description << "\n";
  const std::size_t failed = run_figure(recipe, out, workers);
  if (failed) std::cerr << failed << " points failed; see " << name << "_rows.csv\n";
  return failed ? kExitNumerical : kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Quantum state transfer through XXZ spin chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("spinxfer ") + kVersion);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<long long> seed;
  Overrides o;

  app.option_defaults()->always_capture_default(false);
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "reserved; every algorithm is deterministic");
  app.add_option("--protocol", o.protocol, "mit | attach");
  app.add_option("--N", o.sites, "chain length");
  app.add_option("--J", o.coupling, "exchange coupling");
  app.add_option("--delta", o.delta, "anisotropy Delta");
  app.add_option("--temperature", o.temperature, "K_B T in units of J");
  app.add_option("--gamma", o.gamma, "depolarizing rate");
  app.add_option("--policy", o.policy, "MIT outcome policy: outcome0 | outcome1 | weighted");
  app.add_option("--variant", o.variant, "abs | re");
  app.add_option("--window", o.window, "time window (default 2N/J)");
  app.add_option("--sample-step", o.sample_step, "sampling interval");
  app.add_option("--axis", o.axis, "sweep axis: delta | length | temperature | gamma");
  app.add_option("--grid", o.grid, "sweep grid: start:stop:step or a,b,c");
  app.add_option("--protocols", o.protocols, "sweep protocols, comma separated");

  auto* trace = app.add_subcommand("trace", "F_av(t) for one scenario: trace.csv and summary.json");
  auto* sweep = app.add_subcommand("sweep", "first-peak sweep along one axis: results.csv");
  auto* figure = app.add_subcommand("figure", "named figure recipe");
  std::string figure_name;
  figure->add_option("name", figure_name, "figure name")->required();
  for (auto* sub : {trace, sweep, figure}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (figure->parsed()) {
      return cmd_figure(figure_name, out.value_or("."), workers.value_or(std::max(1u, std::thread::hardware_concurrency())));
    }
    json config = read_config(config_path);
    apply_overrides(o, config);
    if (trace->parsed()) return cmd_trace(config, out.value_or("."));
    return cmd_sweep(config, out, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace spinxfer::cli
