#include "twophase/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

namespace twophase {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ConfigError("invalid value for " + key + ": " + v + " (expected on|off)");
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  int r = 0;
  try {
    r = std::stoi(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError("invalid integer for " + key + ": " + v);
  return r;
}

std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const char* element_name(PressureElement e) {
  switch (e) {
    case PressureElement::p1: return "p2p1";
    case PressureElement::p0: return "p2p0";
    case PressureElement::p1p0: return "p2p1p0";
  }
  return "";
}

}  // namespace

std::vector<std::string> preset_names() { return {"hysing1", "hysing2"}; }

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.domain = Domain{{0.0, 0.0}, {1.0, 2.0}};
  p.center = Vec2(0.5, 0.5);
  p.radius = 0.25;
  p.final_time = 3.0;
  p.params.rho_plus = 1000;
  p.params.mu_plus = 10;
  p.params.f1 = [](const Vec2&, double) { return Vec2(0, -0.98); };
  p.params.f2 = [](const Vec2&, double) { return Vec2(0, 0); };
  p.params.beta = 0;
  if (name == "hysing1") {
    p.params.rho_minus = 100;
    p.params.mu_minus = 1;
    p.params.gamma = 24.5;
  } else if (name == "hysing2") {
    p.params.rho_minus = 1;
    p.params.mu_minus = 0.1;
    p.params.gamma = 1.96;
  } else {
    throw ConfigError("unknown preset '" + name + "' (available: hysing1, hysing2)");
  }
  return p;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    for (const auto& [k, v] : kv)
      if (k == key) throw ConfigError("conflicting entries for key " + key);
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

RunConfig make_config(const KeyValues& entries) {
  std::string preset_name = "hysing1";
  for (const auto& [k, v] : entries)
    if (k == "preset") preset_name = v;
  const Preset p = preset(preset_name);
  RunConfig c;
  c.preset = p.name;
  c.params = p.params;
  c.domain = p.domain;
  c.center = p.center;
  c.radius = p.radius;
  c.final_time = p.final_time;
  bool outdir_set = false;
  for (const auto& [k, v] : entries) {
    if (k == "preset") continue;
    if (k == "level") {
      const auto comma = v.find(',');
      if (comma == std::string::npos) throw ConfigError("invalid value for level: " + v + " (expected k,l)");
      c.level_fine = parse_int(k, trim(v.substr(0, comma)));
      c.level_coarse = parse_int(k, trim(v.substr(comma + 1)));
    } else if (k == "timestep_divisor") {
      c.timestep_divisor = parse_int(k, v);
    } else if (k == "element") {
      if (v == "p2p1") c.element = PressureElement::p1;
      else if (v == "p2p0") c.element = PressureElement::p0;
      else if (v == "p2p1p0") c.element = PressureElement::p1p0;
      else throw ConfigError("invalid value for element: " + v);
    } else if (k == "xfem") {
      c.xfem = parse_switch(k, v);
    } else if (k == "density_strategy") {
      if (v == "midpoint") c.density = DensityStrategy::midpoint;
      else if (v == "volume_fraction") c.density = DensityStrategy::volume_fraction;
      else throw ConfigError("invalid value for density_strategy: " + v);
    } else if (k == "strict") {
      c.strict = parse_switch(k, v);
    } else if (k == "outdir") {
      c.outdir = v;
      outdir_set = true;
    } else if (k == "snapshot_every") {
      c.snapshot_every = parse_int(k, v);
    } else if (k == "final_time") {
      try {
        c.final_time = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError("invalid value for final_time: " + v);
      }
    } else {
      throw ConfigError("unknown key: " + k);
    }
  }
  if (!outdir_set) c.outdir = default_outdir(c);
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& path, const KeyValues& overrides) {
  KeyValues kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file " + path);
    kv = parse_key_values(in);
  }
  kv.insert(kv.end(), overrides.begin(), overrides.end());
  return make_config(kv);
}

std::string write_config(const RunConfig& c) {
  std::ostringstream os;
  os << "preset = " << c.preset << '\n'
     << "level = " << c.level_fine << ',' << c.level_coarse << '\n'
     << "timestep_divisor = " << c.timestep_divisor << '\n'
     << "element = " << element_name(c.element) << '\n'
     << "xfem = " << (c.xfem ? "on" : "off") << '\n'
     << "density_strategy = " << (c.density == DensityStrategy::midpoint ? "midpoint" : "volume_fraction") << '\n'
     << "strict = " << (c.strict ? "on" : "off") << '\n'
     << "outdir = " << c.outdir << '\n'
     << "snapshot_every = " << c.snapshot_every << '\n'
     << "final_time = " << fmt17(c.final_time) << '\n';
  return os.str();
}

bool same_config(const RunConfig& a, const RunConfig& b) {
  return a.preset == b.preset && a.level_fine == b.level_fine && a.level_coarse == b.level_coarse &&
         a.timestep_divisor == b.timestep_divisor && a.element == b.element && a.xfem == b.xfem &&
         a.density == b.density && a.strict == b.strict && a.outdir == b.outdir &&
         a.snapshot_every == b.snapshot_every && a.final_time == b.final_time;
}

std::string default_outdir(const RunConfig& c) {
  std::string d = "./out/" + c.preset + "_" + std::to_string(c.level_fine) + "_" + std::to_string(c.level_coarse);
  if (c.timestep_divisor != 1) d += "_n" + std::to_string(c.timestep_divisor);
  return d;
}

void write_series_csv(std::ostream& out, const BenchmarkSeries& series) {
  out << "step,t,area,y_c,circularity,V_c,energy,ratio,lambda\n";
  out << std::setprecision(17);
  for (const StepRecord& r : series.records)
    out << r.step << ',' << r.t << ',' << r.area << ',' << r.y_c << ',' << r.circularity << ',' << r.V_c << ','
        << r.energy << ',' << r.ratio << ',' << r.lambda << '\n';
}

BenchmarkSeries read_series_csv(std::istream& in) {
  BenchmarkSeries s;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "step,t,area,y_c,circularity,V_c,energy,ratio,lambda")
    throw Error("series file has an unexpected header");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    StepRecord r;
    char c = 0;
    if (!(ls >> r.step >> c >> r.t >> c >> r.area >> c >> r.y_c >> c >> r.circularity >> c >> r.V_c >> c >>
          r.energy >> c >> r.ratio >> c >> r.lambda))
      throw Error("malformed series row: " + line);
    s.records.push_back(r);
  }
  if (!s.records.empty()) s.initial_area = s.records.front().area;
  return s;
}

void write_summary_json(std::ostream& out, const BenchmarkSummary& s) {
  nlohmann::ordered_json j;
  j["L_loss"] = s.L_loss;
  j["circ_min"] = s.circ_min;
  j["t_circ_min"] = s.t_circ_min;
  j["Vc_max"] = s.Vc_max;
  j["t_Vc_max"] = s.t_Vc_max;
  j["Vc_max2"] = s.Vc_max2 ? nlohmann::ordered_json(*s.Vc_max2) : nlohmann::ordered_json(nullptr);
  j["t_Vc_max2"] = s.t_Vc_max2 ? nlohmann::ordered_json(*s.t_Vc_max2) : nlohmann::ordered_json(nullptr);
  j["yc_final"] = s.yc_final;
  out << std::setw(2) << j << '\n';
}

void write_vtk(std::ostream& out, const Simulation& sim) {
  const Triangulation& tri = sim.mesh().leaves();
  const VelocitySpace vs = build_velocity_space(tri);
  const PressureSpace ps = build_pressure_space(tri, sim.config().element, sim.config().xfem);
  ElementClassification cls = sim.classification();
  DiscreteCoefficients co = sim.coefficients();
  if (cls.labels.size() != tri.num_triangles()) {
    cls = classify_elements(tri, sim.curve(), sim.config().density == DensityStrategy::volume_fraction);
    co = discrete_coefficients(cls, sim.config().params, sim.config().density);
  }
  const std::vector<Vec2>& u = sim.velocity();
  const Eigen::VectorXd& p = sim.pressure();
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\nbulk mesh t=" << sim.time() << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << tri.num_points() << " double\n";
  for (const Vec2& x : tri.points) out << x.x() << ' ' << x.y() << " 0\n";
  out << "CELLS " << tri.num_triangles() << ' ' << 4 * tri.num_triangles() << '\n';
  for (const auto& t : tri.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << tri.num_triangles() << '\n';
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) out << "5\n";
  out << "CELL_DATA " << tri.num_triangles() << "\nSCALARS label int 1\nLOOKUP_TABLE default\n";
  for (Side s : cls.labels) out << static_cast<int>(s) << '\n';
  out << "SCALARS rho double 1\nLOOKUP_TABLE default\n";
  for (double r : co.rho) out << r << '\n';
  out << "SCALARS mu double 1\nLOOKUP_TABLE default\n";
  for (double m : co.mu) out << m << '\n';
  out << "POINT_DATA " << tri.num_points() << "\nVECTORS velocity double\n";
  for (std::size_t v = 0; v < tri.num_points(); ++v) out << u[v].x() << ' ' << u[v].y() << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  std::vector<double> pv(tri.num_points(), 0.0);
  if (ps.has_p1() && static_cast<std::size_t>(p.size()) >= ps.num_vertices) {
    for (std::size_t v = 0; v < tri.num_points(); ++v) pv[v] = p[v];
  } else if (static_cast<std::size_t>(p.size()) == ps.num_elements) {
    std::vector<double> wsum(tri.num_points(), 0.0);
    for (std::size_t e = 0; e < tri.num_triangles(); ++e)
      for (int v : tri.triangles[e]) {
        pv[v] += tri.area(e) * p[e];
        wsum[v] += tri.area(e);
      }
    for (std::size_t v = 0; v < tri.num_points(); ++v) pv[v] /= wsum[v];
  }
  for (double x : pv) out << x << '\n';
}

namespace {

void write_svg(const std::string& path, const std::string& title, const std::vector<double>& t,
               const std::vector<double>& y) {
  const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  double y0 = *ymin_it, y1 = *ymax_it;
  if (y1 - y0 <= 1e-300 * std::max(1.0, std::abs(y0))) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  double x0 = *tmin, x1 = *tmax;
  if (x1 <= x0) x1 = x0 + 1;
  auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto sy = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(8);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  auto label = [&](double x, double yy, const std::string& anchor, double v) {
    out << "<text x=\"" << x << "\" y=\"" << yy << "\" text-anchor=\"" << anchor
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << std::setprecision(6) << v << std::setprecision(8)
        << "</text>\n";
  };
  label(ml - 6, sy(y0) + 4, "end", y0);
  label(ml - 6, sy(y1) + 4, "end", y1);
  label(sx(x0), H - mb + 16, "middle", x0);
  label(sx(x1), H - mb + 16, "middle", x1);
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << sx(t[i]) << ',' << sy(y[i]);
  out << "\"/>\n</svg>\n";
}

}  // namespace

std::vector<std::string> emit_plots(const BenchmarkSeries& series, const std::string& outdir) {
  if (series.records.size() < 2) throw Error("series needs at least two rows to plot");
  fs::create_directories(outdir);
  std::vector<double> t;
  for (const auto& r : series.records) t.push_back(r.t);
  const std::vector<std::pair<std::string, double StepRecord::*>> fields{{"circularity", &StepRecord::circularity},
                                                                        {"y_c", &StepRecord::y_c},
                                                                        {"V_c", &StepRecord::V_c},
                                                                        {"energy", &StepRecord::energy},
                                                                        {"ratio", &StepRecord::ratio}};
  std::vector<std::string> paths;
  for (const auto& [name, field] : fields) {
    std::vector<double> y;
    for (const auto& r : series.records) y.push_back(r.*field);
    const std::string path = (fs::path(outdir) / (name + ".svg")).string();
    write_svg(path, name, t, y);
    paths.push_back(path);
  }
  return paths;
}

RunOutcome run_benchmark(const RunConfig& config, bool force, std::ostream& log) {
  const fs::path dir(config.outdir.empty() ? default_outdir(config) : config.outdir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ConfigError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.txt");
    cfg << write_config(config);
  }
  Simulation sim(config);
  std::ofstream solver_log(dir / "solver.log");
  auto snapshot = [&](int step) {
    std::ofstream ic(dir / ("interface_" + std::to_string(step) + ".txt"));
    write_snapshot(ic, sim.curve(), sim.time());
    std::ofstream vtk(dir / ("bulk_" + std::to_string(step) + ".vtk"));
    write_vtk(vtk, sim);
  };
  if (config.snapshot_every > 0) snapshot(0);
  const int M = config.steps();
  while (!sim.finished()) {
    const StepRecord& r = sim.step();
    solver_log << r.step << ' ' << r.iterations << ' ' << std::setprecision(6) << r.residual << '\n';
    if (config.snapshot_every > 0 && (r.step % config.snapshot_every == 0 || r.step == M)) snapshot(r.step);
    if (r.step % 100 == 0 || r.step == M)
      log << "step " << r.step << "/" << M << " t=" << r.t << " J=" << r.elements << " K=" << r.interface_vertices
          << " circ=" << r.circularity << " Vc=" << r.V_c << " yc=" << r.y_c << " iters=" << r.iterations
          << std::endl;
  }
  RunOutcome o;
  o.summary = sim.series().summary(config.preset == "hysing2");
  o.warnings = sim.warnings();
  {
    std::ofstream csv(dir / "series.csv");
    write_series_csv(csv, sim.series());
    std::ofstream js(dir / "summary.json");
    write_summary_json(js, o.summary);
  }
  o.exit_code = config.strict && o.warnings > 0 ? 2 : 0;
  return o;
}

}  // namespace twophase
