#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "twophase/timestepper.hpp"

namespace twophase {

struct Preset {
  std::string name;
  PhysParams params;
  Domain domain;
  Vec2 center;
  double radius = 0;
  double final_time = 0;
};

/// Known names: hysing1, hysing2.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Reads `key = value` lines; '#' starts a comment. Repeated keys are rejected.
KeyValues parse_key_values(std::istream& in);

/// Builds a run configuration; later entries override earlier ones.
RunConfig make_config(const KeyValues& entries);
/// Reads a configuration file and applies the overrides on top.
RunConfig parse_config(const std::string& path, const KeyValues& overrides = {});
std::string write_config(const RunConfig& config);
/// Equality of the user-visible configuration keys.
bool same_config(const RunConfig& a, const RunConfig& b);

std::string default_outdir(const RunConfig& config);

void write_series_csv(std::ostream& out, const BenchmarkSeries& series);
BenchmarkSeries read_series_csv(std::istream& in);
void write_summary_json(std::ostream& out, const BenchmarkSummary& summary);

/// Legacy VTK with element labels, density, viscosity, vertex velocity and P1 pressure.
void write_vtk(std::ostream& out, const Simulation& sim);

/// circularity.svg, y_c.svg, V_c.svg, energy.svg, ratio.svg in `outdir`. Returns the paths.
std::vector<std::string> emit_plots(const BenchmarkSeries& series, const std::string& outdir);

struct RunOutcome {
  BenchmarkSummary summary;
  int warnings = 0;
  int exit_code = 0;
};

/// Runs a simulation writing series.csv, summary.json, solver.log and snapshots to config.outdir.
RunOutcome run_benchmark(const RunConfig& config, bool force, std::ostream& log);

}  // namespace twophase
