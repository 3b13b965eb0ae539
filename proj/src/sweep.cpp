#include "spinxfer/cli.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <thread>

namespace spinxfer::cli {

using nlohmann::json;

namespace {

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (n == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string opt(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

json peak_json(const std::optional<Peak>& peak, const std::vector<double>& times) {
  if (!peak) return nullptr;
  json candidates = json::array();
  for (const std::size_t i : peak->local_maxima) candidates.push_back(times[i]);
  return {{"t_max", peak->t_max},
          {"F_max", peak->f_max},
          {"sample_index", peak->index},
          {"window_max", peak->global_max},
          {"local_maxima_t", candidates}};
}

std::vector<Protocol> both_protocols() { return {Protocol::Mit, Protocol::Attach}; }

}  // namespace

std::vector<ResultRow> run_rows(const std::vector<ScenarioSpec>& specs, unsigned workers) {
  std::vector<ResultRow> rows(specs.size());
  parallel_for(specs.size(), workers, [&](std::size_t i) {
    ResultRow& row = rows[i];
    row.scenario = specs[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      const ScenarioResult r = run_scenario(specs[i]);
      row.peak = r.trace.peak;
      for (const auto& b : r.branches) {
        const auto k = static_cast<std::size_t>(b.outcome);
        row.branch_probability[k] = b.probability;
        if (b.trace) row.branch_peak[k] = b.trace->peak;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "schema_version,index,protocol,N,J,Delta,temperature,gamma,mit_outcome_policy,variant,"
        "t_max_window,sample_step,t_max,F_max,peak_sample_index,window_max,n_local_maxima,"
        "p_outcome0,p_outcome1,t_max_outcome0,F_max_outcome0,t_max_outcome1,F_max_outcome1,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& r = rows[i];
    const ScenarioSpec& s = r.scenario;
    const bool mit = s.protocol == Protocol::Mit;
    os << kSchemaVersion << ',' << i << ',' << to_string(s.protocol) << ',' << s.chain.sites << ','
       << format_number(s.chain.coupling) << ',' << format_number(s.chain.anisotropy) << ','
       << opt(s.temperature) << ',' << opt(s.gamma) << ',' << (mit ? to_string(s.mit_outcome_policy) : "")
       << ',' << to_string(s.variant) << ',' << format_number(s.grid.resolved_window(s.chain)) << ','
       << format_number(s.grid.sample_step) << ',';
    if (r.peak) {
      os << format_number(r.peak->t_max) << ',' << format_number(r.peak->f_max) << ',' << r.peak->index << ','
         << format_number(r.peak->global_max) << ',' << r.peak->local_maxima.size() << ',';
    } else {
      os << ",,,,,";
    }
    os << opt(r.branch_probability[0]) << ',' << opt(r.branch_probability[1]) << ',';
    for (const auto& p : r.branch_peak) {
      os << (p ? format_number(p->t_max) : "") << ',' << (p ? format_number(p->f_max) : "") << ',';
    }
    os << csv_field(r.error) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "index,wall_seconds\n";
  for (std::size_t i = 0; i < rows.size(); ++i) os << i << ',' << format_number(rows[i].wall_seconds) << '\n';
}

void write_trace_csv(std::ostream& os, const ScenarioResult& result) {
  const bool mit = result.scenario.protocol == Protocol::Mit;
  os << "t,f_av" << (mit ? ",f_av_outcome0,f_av_outcome1" : "") << '\n';
  const auto& t = result.trace.times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << format_number(t[i]) << ',' << format_number(result.trace.f_av[i]);
    if (mit) {
      for (const auto& b : result.branches) {
        os << ',' << (b.trace ? format_number(b.trace->f_av[i]) : "");
      }
    }
    os << '\n';
  }
}

json summary_json(const ScenarioResult& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "spinxfer";
  j["tool_version"] = kVersion;
  j["scenario"] = scenario_to_json(result.scenario);
  j["samples"] = result.trace.times.size();
  j["peak"] = peak_json(result.trace.peak, result.trace.times);
  json branches = json::array();
  for (const auto& b : result.branches) {
    branches.push_back({{"outcome", b.outcome},
                        {"probability", b.probability},
                        {"present", b.trace.has_value()},
                        {"peak", b.trace ? peak_json(b.trace->peak, b.trace->times) : json(nullptr)}});
  }
  j["branches"] = branches;
  j["ground_sector"] = result.ground_sector ? json(*result.ground_sector) : json(nullptr);
  j["degenerate_sectors"] = result.degenerate_sectors;
  return j;
}

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names{"fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b",
                                              "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "fig5c"};
  return names;
}

FigureRecipe figure_recipe(const std::string& name) {
  FigureRecipe r;
  r.name = name;
  r.column = "F_max";
  SweepConfig& s = r.sweep;
  s.protocols = both_protocols();
  s.base.chain = {16, 1.0, 1.0};
  const auto delta_grid = expand_range(0.0, 2.0, 0.1);

  if (name == "fig2a" || name == "fig2b") {
    r.trace = true;
    s.base.chain.anisotropy = name == "fig2a" ? 1.0 : 0.0;
    r.description = "F_av(t), N=16, both protocols";
  } else if (name == "fig2c" || name == "fig2d") {
    s.axis = Axis::Delta;
    s.grid = delta_grid;
    r.column = name == "fig2c" ? "F_max" : "t_max";
    r.description = "first peak versus Delta, N=16";
  } else if (name == "fig3a" || name == "fig3b") {
    s.base.chain.anisotropy = 1.1;
    s.axis = Axis::Length;
    s.grid = expand_range(6.0, 16.0, 2.0);
    r.column = name == "fig3a" ? "F_max" : "t_max";
    r.description = "first peak versus N, Delta=1.1";
  } else if (name == "fig4a" || name == "fig4b" || name == "fig4c") {
    s.base.chain.sites = 10;
    s.base.mit_outcome_policy = OutcomePolicy::Outcome0;
    if (name == "fig4a") {
      s.axis = Axis::Temperature;
      s.grid = expand_range(0.05, 3.0, 0.05);
      r.description = "F_max versus K_B T, N=10, Delta=1, MIT outcome 0";
    } else {
      s.base.temperature = name == "fig4b" ? 0.5 : 1.5;
      s.axis = Axis::Delta;
      s.grid = delta_grid;
      r.description = "F_max versus Delta at fixed K_B T, N=10, MIT outcome 0";
    }
  } else if (name == "fig5a" || name == "fig5b" || name == "fig5c") {
    s.base.chain.sites = 8;
    s.base.mit_outcome_policy = OutcomePolicy::Outcome0;
    if (name == "fig5a") {
      s.axis = Axis::Gamma;
      s.grid = expand_range(0.0, 0.2, 0.01);
      r.description = "F_max versus gamma, N=8, Delta=1, MIT outcome 0";
    } else {
      s.base.gamma = name == "fig5b" ? 0.05 : 0.1;
      s.axis = Axis::Delta;
      s.grid = delta_grid;
      r.description = "F_max versus Delta at fixed gamma, N=8, MIT outcome 0";
    }
  } else {
    std::string known;
    for (const auto& n : figure_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown figure '" + name + "' (known: " + known + ")");
  }
  return r;
}

std::size_t run_figure(const FigureRecipe& recipe, const std::filesystem::path& out, unsigned workers) {
  std::filesystem::create_directories(out);
  const auto& s = recipe.sweep;
  if (recipe.trace) {
    std::vector<ScenarioSpec> specs;
    for (const Protocol p : s.protocols) {
      ScenarioSpec spec = s.base;
      spec.protocol = p;
      spec.validate();
      specs.push_back(spec);
    }
    std::vector<std::optional<ScenarioResult>> results(specs.size());
    parallel_for(specs.size(), workers, [&](std::size_t i) { results[i] = run_scenario(specs[i]); });
    const ScenarioResult& mit = *results[0];
    const FidelityTrace& att = results[1]->trace;
    std::ofstream os(out / (recipe.name + ".csv"), std::ios::binary);
    os << "t,f_av_mit,f_av_mit_outcome0,f_av_mit_outcome1,f_av_attach\n";
    for (std::size_t i = 0; i < mit.trace.times.size(); ++i) {
      os << format_number(mit.trace.times[i]) << ',' << format_number(mit.trace.f_av[i]);
      for (const auto& b : mit.branches) os << ',' << (b.trace ? format_number(b.trace->f_av[i]) : "");
      os << ',' << format_number(att.f_av[i]) << '\n';
    }
    return 0;
  }

  const auto rows = run_rows(s.expand(), workers);
  {
    std::ofstream os(out / (recipe.name + "_rows.csv"), std::ios::binary);
    write_results_csv(os, rows);
  }
  std::size_t failures = 0;
  std::ofstream os(out / (recipe.name + ".csv"), std::ios::binary);
  os << to_string(s.axis);
  for (const Protocol p : s.protocols) os << ',' << recipe.column << '_' << to_string(p);
  os << '\n';
  const std::size_t np = s.protocols.size();
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    os << format_number(s.grid[g]);
    for (std::size_t k = 0; k < np; ++k) {
      const ResultRow& row = rows[g * np + k];
      os << ',';
      if (!row.peak) {
        ++failures;
        continue;
      }
      os << format_number(recipe.column == "t_max" ? row.peak->t_max : row.peak->f_max);
    }
    os << '\n';
  }
  return failures;
}

}  // namespace spinxfer::cli
