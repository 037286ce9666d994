// Command line front end for the rising bubble benchmarks.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "twophase/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-phase flow benchmark driver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a benchmark simulation");
  std::string config_path, preset, level, element, xfem, density, strict, outdir;
  int divisor = 0, snapshot_every = -1;
  double final_time = 0;
  bool force = false;
  auto* opt_config = run->add_option("--config", config_path, "flat key = value configuration file");
  auto* opt_preset = run->add_option("--preset", preset, "hysing1 or hysing2");
  opt_config->excludes(opt_preset);
  run->add_option("--level", level, "refinement levels k,l");
  run->add_option("--timestep-divisor", divisor, "n in tau = 1e-3/n");
  run->add_option("--element", element, "p2p1, p2p0 or p2p1p0");
  run->add_option("--xfem", xfem, "on or off");
  run->add_option("--density-strategy", density, "midpoint or volume_fraction");
  run->add_option("--strict", strict, "on or off");
  run->add_option("--outdir", outdir, "output directory");
  run->add_option("--snapshot-every", snapshot_every, "snapshot cadence in steps (0 disables)");
  run->add_option("--final-time", final_time, "override the preset end time");
  run->add_flag("--force", force, "overwrite an existing output directory");

  auto* plot = app.add_subcommand("plot", "render SVG charts from a series file");
  std::string series_path, plot_dir;
  plot->add_option("--series", series_path, "series.csv")->required();
  plot->add_option("--outdir", plot_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (config_path.empty() && preset.empty()) {
        std::cerr << "run: one of --config or --preset is required\n";
        return 64;
      }
      twophase::KeyValues kv;
      if (!preset.empty()) kv.emplace_back("preset", preset);
      if (!level.empty()) kv.emplace_back("level", level);
      if (divisor) kv.emplace_back("timestep_divisor", std::to_string(divisor));
      if (!element.empty()) kv.emplace_back("element", element);
      if (!xfem.empty()) kv.emplace_back("xfem", xfem);
      if (!density.empty()) kv.emplace_back("density_strategy", density);
      if (!strict.empty()) kv.emplace_back("strict", strict);
      if (!outdir.empty()) kv.emplace_back("outdir", outdir);
      if (snapshot_every >= 0) kv.emplace_back("snapshot_every", std::to_string(snapshot_every));
      if (final_time > 0) {
        std::ostringstream os;
        os.precision(17);
        os << final_time;
        kv.emplace_back("final_time", os.str());
      }
      const twophase::RunConfig cfg = twophase::parse_config(config_path, kv);
      const auto outcome = twophase::run_benchmark(cfg, force, std::cout);
      twophase::write_summary_json(std::cout, outcome.summary);
      return outcome.exit_code;
    }
    std::ifstream in(series_path);
    if (!in) {
      std::cerr << "plot: cannot read " << series_path << '\n';
      return 66;
    }
    for (const auto& p : twophase::emit_plots(twophase::read_series_csv(in), plot_dir)) std::cout << p << '\n';
    return 0;
  } catch (const twophase::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
