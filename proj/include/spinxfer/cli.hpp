#pragma once

// Command-line front end: JSON configuration, sweeps over one parameter
// axis, named figure recipes and deterministic CSV / JSON output.

#include "spinxfer/transfer.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spinxfer::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Malformed or out-of-range configuration (maps to exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 12 significant digits, '.' decimal point, "nan"/"inf" spelled out.
std::string format_number(double x);

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

enum class Axis { Delta, Length, Temperature, Gamma };

Axis axis_from_string(const std::string& name);
const char* to_string(Axis axis);

struct SweepConfig {
  ScenarioSpec base;
  Axis axis = Axis::Delta;
  std::vector<double> grid;
  /// Each grid point is run once per listed protocol.
  std::vector<Protocol> protocols;
  std::filesystem::path outputs = ".";
  unsigned workers = 1;

  /// Every point's ScenarioSpec, validated up front (throws ConfigError).
  std::vector<ScenarioSpec> expand() const;
};

SweepConfig sweep_from_json(const nlohmann::json& j);

/// {start, stop, step} expands to start + k step for k = 0 .. floor((stop - start) / step).
std::vector<double> expand_range(double start, double stop, double step);

struct ResultRow {
  ScenarioSpec scenario;
  std::optional<Peak> peak;
  std::array<std::optional<double>, 2> branch_probability;
  std::array<std::optional<Peak>, 2> branch_peak;
  std::string error;
  double wall_seconds = 0.0;  // timing sidecar only
};

/// Runs every scenario on a pool of `workers` threads; rows come back in
/// input order and do not depend on the worker count.
std::vector<ResultRow> run_rows(const std::vector<ScenarioSpec>& specs, unsigned workers);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_timing_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_trace_csv(std::ostream& os, const ScenarioResult& result);
nlohmann::json summary_json(const ScenarioResult& result);

/// Named figure recipes.
const std::vector<std::string>& figure_names();

struct FigureRecipe {
  std::string name;
  std::string description;
  bool trace = false;  // time traces instead of a peak sweep
  SweepConfig sweep;
  std::string column;  // "F_max" or "t_max" for sweeps
};

FigureRecipe figure_recipe(const std::string& name);

/// Writes <out>/<name>.csv (and for sweeps <out>/<name>_rows.csv with the
/// full result rows). Returns the number of failed points.
std::size_t run_figure(const FigureRecipe& recipe, const std::filesystem::path& out, unsigned workers);

/// Entry point used by the spinxfer executable.
int run(int argc, char** argv);

}  // namespace spinxfer::cli
