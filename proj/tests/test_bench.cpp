#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>

#include "twophase/bench.hpp"

using namespace twophase;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("twophase_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Tag balance of a small XML document without attributes containing '>'.
bool balanced_xml(const std::string& s) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z_][\w:.-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3].length()) continue;
    if (m[1].length()) {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TWOPHASE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

KeyValues kv(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

}  // namespace

TEST_CASE("presets") {
  const Preset a = preset("hysing1");
  CHECK(a.params.gamma == 24.5);
  CHECK(a.params.rho_plus == 1000);
  CHECK(a.params.rho_minus == 100);
  CHECK(a.params.mu_plus == 10);
  CHECK(a.params.mu_minus == 1);
  CHECK(a.params.f1(Vec2(0.3, 0.2), 0.0) == Vec2(0, -0.98));
  CHECK(a.params.f2(Vec2(0.3, 0.2), 0.0) == Vec2(0, 0));
  CHECK(a.domain.upper == Vec2(1, 2));
  CHECK(a.center == Vec2(0.5, 0.5));
  CHECK(a.radius == 0.25);
  CHECK(a.final_time == 3);
  const Preset b = preset("hysing2");
  CHECK(b.params.mu_minus == 0.1);
  CHECK(b.params.rho_minus == 1);
  CHECK(b.params.gamma == 1.96);
  CHECK(b.params.rho_plus == 1000);
  try {
    preset("nope");
    FAIL("no error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("hysing1") != std::string::npos);
    CHECK(msg.find("hysing2") != std::string::npos);
  }
  CHECK(preset_names().size() == 2);
}

TEST_CASE("configuration parsing") {
  const RunConfig c = make_config(kv("preset = hysing1\nlevel = 5,2\nelement = p2p1\nxfem = on # comment\n"));
  CHECK(c.level_fine == 5);
  CHECK(c.level_coarse == 2);
  CHECK(c.tau() == 1e-3);
  CHECK(c.element == PressureElement::p1);
  CHECK(c.xfem);
  CHECK(c.outdir == "./out/hysing1_5_2");

  const RunConfig d = make_config({{"timestep_divisor", "2"}, {"level", "9,4"}});
  CHECK(d.tau() == 5e-4);
  CHECK(d.adapt().n_fine == 512);
  CHECK(d.adapt().n_coarse == 16);
  CHECK(d.outdir == "./out/hysing1_9_4_n2");

  const RunConfig e = make_config(kv("preset = hysing2\nelement = p2p1p0\nxfem = off\ndensity_strategy = volume_fraction\n"
                                     "strict = on\noutdir = /tmp/x\nsnapshot_every = 7\n"));
  CHECK(e.params.gamma == 1.96);
  CHECK(e.element == PressureElement::p1p0);
  CHECK_FALSE(e.xfem);
  CHECK(e.density == DensityStrategy::volume_fraction);
  CHECK(e.strict);
  CHECK(e.snapshot_every == 7);

  CHECK_THROWS_WITH_AS(make_config({{"colour", "red"}}), "unknown key: colour", ConfigError);
  CHECK_THROWS_AS(make_config({{"element", "p3p2"}}), ConfigError);
  CHECK_THROWS_AS(make_config({{"level", "5"}}), ConfigError);
  CHECK_THROWS_AS(make_config({{"xfem", "maybe"}}), ConfigError);
  CHECK_THROWS_AS(kv("level = 5,2\nlevel = 6,2\n"), ConfigError);
  CHECK_THROWS_AS(kv("just words\n"), ConfigError);
}

TEST_CASE("configuration round trip") {
  TempDir dir("config");
  fs::create_directories(dir.path);
  const RunConfig c = make_config(kv("preset = hysing2\nlevel = 6,3\ntimestep_divisor = 4\nelement = p2p0\n"
                                     "xfem = off\nstrict = on\nsnapshot_every = 3\n"));
  {
    std::ofstream out(dir.path / "run.cfg");
    out << write_config(c);
  }
  const RunConfig d = parse_config((dir.path / "run.cfg").string());
  CHECK(same_config(c, d));
  CHECK(write_config(d) == write_config(c));
  const RunConfig e = parse_config((dir.path / "run.cfg").string(), {{"level", "5,2"}});
  CHECK(e.level_fine == 5);
  CHECK_FALSE(same_config(c, e));
  CHECK_THROWS_AS(parse_config((dir.path / "missing.cfg").string()), ConfigError);
}

TEST_CASE("series files and plots") {
  BenchmarkSeries s;
  s.initial_area = 0.19;
  for (int i = 1; i <= 30; ++i) {
    StepRecord r;
    r.step = i;
    r.t = i * 1e-3;
    r.area = 0.19 - 1e-7 * i;
    r.y_c = 0.5 + 0.01 * i;
    r.circularity = 1 - 0.001 * i;
    r.V_c = 0.1 * std::sin(0.1 * i);
    r.energy = 40.0 / i;
    r.ratio = 1 + 0.01 * i;
    r.lambda = -0.5 * i;
    s.records.push_back(r);
  }
  std::stringstream csv;
  write_series_csv(csv, s);
  CHECK(csv.str().rfind("step,t,area,y_c,circularity,V_c,energy,ratio,lambda\n", 0) == 0);
  const BenchmarkSeries back = read_series_csv(csv);
  REQUIRE(back.records.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(back.records[i].area == s.records[i].area);
    CHECK(back.records[i].V_c == s.records[i].V_c);
    CHECK(back.records[i].lambda == s.records[i].lambda);
  }

  std::stringstream js;
  write_summary_json(js, s.summary(false));
  const auto j = nlohmann::json::parse(js.str());
  for (const char* key : {"L_loss", "circ_min", "t_circ_min", "Vc_max", "t_Vc_max", "Vc_max2", "t_Vc_max2", "yc_final"})
    CHECK(j.contains(key));
  CHECK(j["Vc_max2"].is_null());
  CHECK(j["yc_final"].get<double>() == s.records.back().y_c);

  TempDir dir("plots");
  const auto files = emit_plots(s, dir.path.string());
  CHECK(files.size() == 5);
  for (const auto& f : files) {
    const std::string svg = slurp(f);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(balanced_xml(svg));
  }
  // y_c increases, so the polyline climbs (SVG y decreases)
  const std::string yc = slurp(dir.path / "y_c.svg");
  const auto pos = yc.find("points=\"");
  REQUIRE(pos != std::string::npos);
  std::istringstream pts(yc.substr(pos + 8, yc.find('"', pos + 8) - pos - 8));
  std::string pair;
  double last = INFINITY;
  int count = 0;
  while (pts >> pair) {
    const double y = std::stod(pair.substr(pair.find(',') + 1));
    CHECK(y < last);
    last = y;
    ++count;
  }
  CHECK(count == 30);

  BenchmarkSeries one;
  one.records.push_back(s.records[0]);
  CHECK_THROWS(emit_plots(one, dir.path.string()));
  BenchmarkSeries none;
  CHECK_THROWS(emit_plots(none, dir.path.string()));
}

TEST_CASE("benchmark run writes its outputs") {
  TempDir dir("run");
  RunConfig c = make_config({{"level", "4,2"}, {"final_time", "0.005"}, {"snapshot_every", "2"},
                             {"strict", "on"}, {"outdir", dir.path.string()}});
  std::ostringstream log;
  const RunOutcome out = run_benchmark(c, false, log);
  CHECK(out.exit_code == 0);
  CHECK(out.warnings == 0);
  for (const char* f : {"config.txt", "series.csv", "summary.json", "solver.log", "interface_0.txt", "interface_2.txt",
                        "interface_5.txt", "bulk_0.vtk", "bulk_5.vtk"})
    CHECK_MESSAGE(fs::exists(dir.path / f), f);
  std::ifstream series(dir.path / "series.csv");
  CHECK(read_series_csv(series).records.size() == 5);
  const std::string vtk = slurp(dir.path / "bulk_5.vtk");
  for (const char* k : {"POINTS", "CELLS", "CELL_DATA", "label", "rho", "mu", "POINT_DATA", "velocity", "pressure"})
    CHECK(vtk.find(k) != std::string::npos);
  CHECK(parse_config((dir.path / "config.txt").string()).level_fine == 4);

  std::ostringstream log2;
  CHECK_THROWS_AS(run_benchmark(c, false, log2), ConfigError);
  const std::string first = slurp(dir.path / "series.csv");
  const RunOutcome again = run_benchmark(c, true, log2);
  CHECK(again.exit_code == 0);
  CHECK(slurp(dir.path / "series.csv") == first);
}

TEST_CASE("command line") {
  TempDir dir("cli");
  const std::string out = dir.path.string();
  CHECK(run_cli("run --preset hysing1 --level 4,2 --final-time 0.002 --snapshot-every 0 --outdir " + out) == 0);
  CHECK(fs::exists(dir.path / "summary.json"));
  CHECK(run_cli("run --preset hysing1 --level 4,2 --final-time 0.002 --outdir " + out) != 0);
  CHECK(run_cli("run --preset hysing1 --level 4,2 --final-time 0.002 --force --outdir " + out) == 0);
  CHECK(run_cli("run --preset nope") != 0);
  CHECK(run_cli("run --level 4,2") != 0);
  CHECK(run_cli("run --preset hysing1 --config x.cfg") != 0);
  CHECK(run_cli("run --preset hysing1 --element p9") != 0);
  CHECK(run_cli("plot --series " + (dir.path / "series.csv").string() + " --outdir " + (dir.path / "plots").string()) == 0);
  CHECK(fs::exists(dir.path / "plots" / "V_c.svg"));
}
