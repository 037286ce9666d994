#include "twophase/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twophase {

int RunConfig::steps() const { return static_cast<int>(std::lround(final_time / tau())); }

AdaptConfig RunConfig::adapt() const {
  AdaptConfig a;
  a.n_fine = 1 << level_fine;
  a.n_coarse = 1 << level_coarse;
  a.allow_coarsening = !strict;
  return a;
}

void RunConfig::validate() const {
  if (level_fine <= level_coarse || level_coarse < 0 || level_fine > 20)
    throw ConfigError("level must satisfy 0 <= l < k <= 20");
  if (timestep_divisor < 1) throw ConfigError("timestep divisor must be positive");
  if (!(final_time > 0)) throw ConfigError("final time must be positive");
  if (std::abs(steps() * tau() - final_time) > 1e-12 * std::max(1.0, final_time))
    throw ConfigError("final time is not a multiple of the time step");
  if (snapshot_every < 0) throw ConfigError("snapshot cadence must be non-negative");
  params.validate();
  solver.validate();
}

BenchmarkSummary BenchmarkSeries::summary(bool split_maxima) const {
  BenchmarkSummary s;
  if (records.empty()) return s;
  s.L_loss = (initial_area - records.back().area) / initial_area;
  s.yc_final = records.back().y_c;
  const std::size_t n = records.size();
  std::size_t ic = 0, iv = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (records[i].circularity < records[ic].circularity) ic = i;
    if (records[i].V_c > records[iv].V_c) iv = i;
  }
  s.circ_min = records[ic].circularity;
  s.t_circ_min = records[ic].t;
  s.Vc_max = records[iv].V_c;
  s.t_Vc_max = records[iv].t;
  if (!split_maxima || n < 3) return s;
  std::vector<std::size_t> left(n), right(n);
  left[0] = 0;
  for (std::size_t i = 1; i < n; ++i) left[i] = records[i].V_c > records[left[i - 1]].V_c ? i : left[i - 1];
  right[n - 1] = n - 1;
  for (std::size_t i = n - 1; i-- > 0;) right[i] = records[i].V_c >= records[right[i + 1]].V_c ? i : right[i + 1];
  double best = 0;
  std::size_t split = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double depth =
        std::min(records[left[i]].V_c, records[right[i]].V_c) - records[i].V_c;
    if (depth > best) {
      best = depth;
      split = i;
    }
  }
  if (best <= 0) return s;
  const StepRecord& m1 = records[left[split]];
  const StepRecord& m2 = records[right[split]];
  s.Vc_max = m1.V_c;
  s.t_Vc_max = m1.t;
  s.Vc_max2 = m2.V_c;
  s.t_Vc_max2 = m2.t;
  return s;
}

double energy(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& rho,
              const std::vector<Vec2>& u, const InterfaceCurve& curve, double gamma) {
  return 0.5 * weighted_mass(tri, vs, rho, u, u) + gamma * perimeter(curve);
}

double rise_velocity(const Triangulation& tri, const VelocitySpace& vs, const ElementClassification& cls,
                     const PhysParams& params, DensityStrategy strategy, const std::vector<Vec2>& u) {
  const std::vector<double> rho = phase_field(cls, params.rho_minus, 0.0, strategy);
  double num = 0, den = 0;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    if (rho[e] == 0) continue;
    const auto dofs = vs.element_dofs(tri, e);
    const double area = tri.area(e);
    num += rho[e] * area / 3.0 * (u[dofs[3]].y() + u[dofs[4]].y() + u[dofs[5]].y());
    den += rho[e] * area;
  }
  return den > 0 ? num / den : 0.0;
}

Simulation::Simulation(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  adapt_ = config_.adapt();
  mesh_ = BulkMesh::uniform(config_.domain, adapt_.n_coarse);
  curve_ = config_.initial_curve ? *config_.initial_curve
                                 : InterfaceCurve::circle(config_.center, config_.radius, 1 << config_.level_fine);
  for (std::size_t j = 0; j < curve_.size(); ++j) vol_max_ = std::max(vol_max_, curve_.segment_length(j));
  adapt_to_interface(mesh_, curve_, adapt_);
  u_.assign(build_velocity_space(mesh_.leaves()).size(), Vec2::Zero());
  p_ = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(build_pressure_space(mesh_.leaves(), config_.element, config_.xfem).size()));
  series_.initial_area = enclosed_area(curve_);
}

const StepRecord& Simulation::step() {
  const double tau = config_.tau();
  const double t_next = (step_ + 1) * tau;
  const PhysParams& params = config_.params;

  // Mesh adaptation and transfer of the previous fields.
  std::vector<Vec2> u_hat = u_;
  std::vector<double> rho_hat = rho_prev_;
  Eigen::VectorXd p_hat = p_;
  if (!config_.fixed_mesh && step_ > 0) {
    const BulkMesh old = mesh_;
    adapt_to_interface(mesh_, curve_, adapt_);
    if (mesh_.revision() != old.revision()) {
      u_hat = interpolate_velocity(old, u_, mesh_);
      rho_hat = project_density(old, rho_prev_, mesh_);
      p_hat = transfer_pressure(old, build_pressure_space(old.leaves(), config_.element, config_.xfem), p_, mesh_,
                                build_pressure_space(mesh_.leaves(), config_.element, config_.xfem));
      const VelocitySpace old_vs = build_velocity_space(old.leaves());
      const VelocitySpace new_vs = build_velocity_space(mesh_.leaves());
      transfer_energy_ = {weighted_mass(mesh_.leaves(), new_vs, rho_hat, u_hat, u_hat),
                          weighted_mass(old.leaves(), old_vs, rho_prev_, u_, u_)};
      if (config_.strict && transfer_energy_.first > transfer_energy_.second * (1 + 1e-12) + 1e-300) {
        std::ostringstream os;
        os << "step " << step_ << ": transferred kinetic energy increased";
        throw StabilityViolation(os.str());
      }
    }
  }
  const Triangulation& tri = mesh_.leaves();

  cls_ = classify_elements(tri, curve_, config_.density == DensityStrategy::volume_fraction);
  coeffs_ = discrete_coefficients(cls_, params, config_.density, step_ == 0 ? nullptr : &rho_hat);
  if (step_ == 0) rho_hat = coeffs_.rho;

  const VelocitySpace vs = build_velocity_space(tri);
  const PressureSpace ps = build_pressure_space(tri, config_.element, config_.xfem);
  AssemblyInput in;
  in.tri = &tri;
  in.vs = &vs;
  in.ps = &ps;
  in.cls = &cls_;
  in.curve = &curve_;
  in.coeffs = &coeffs_;
  in.u_prev = &u_hat;
  in.tau = tau;
  in.t_next = t_next;
  in.params = &params;
  const AssembledSystem sys = assemble_system(in);

  const InterfaceBlock block(sys.NG, sys.AG, tau);
  Eigen::VectorXd p0(static_cast<Eigen::Index>(sys.pressure_columns()));
  p0.head(p_hat.size()) = p_hat;
  if (sys.xfem()) p0[p0.size() - 1] = lambda_;
  SolveResult res;
  try {
    res = solve_coupled(sys, &block, config_.solver, &p0);
  } catch (const Error& e) {
    throw Error("step " + std::to_string(step_) + ": " + e.what());
  }
  const InterfaceUpdate up = recover_interface(block, sys, res.u);
  std::vector<Vec2> u_new = vs.extend(res.u);

  InterfaceCurve next;
  try {
    next = curve_.displaced(up.dX);
  } catch (const Error& e) {
    throw Error("step " + std::to_string(step_) + ": " + e.what());
  }

  StepRecord rec;
  rec.step = step_ + 1;
  rec.t = t_next;
  {
    const double len_old = perimeter(curve_), len_new = perimeter(next);
    std::vector<Vec2> du(u_new.size());
    for (std::size_t i = 0; i < du.size(); ++i) du[i] = u_new[i] - u_hat[i];
    const double rhs = 0.5 * weighted_mass(tri, vs, rho_hat, u_hat, u_hat) + params.gamma * len_old +
                       tau * forcing_work(tri, vs, coeffs_.rho, params, t_next, u_new);
    double lhs = 0.5 * weighted_mass(tri, vs, coeffs_.rho, u_new, u_new) + params.gamma * len_new +
                 0.5 * weighted_mass(tri, vs, rho_hat, du, du) +
                 2 * tau * viscous_dissipation(tri, vs, coeffs_.mu, u_new);
    if (params.beta > 0) lhs += tau * params.beta * slip_boundary_norm(tri, vs, u_new);
    rec.margin = rhs - lhs;
    rec.margin_scale = std::abs(rhs);
    if (rec.margin < -1e-9 * rec.margin_scale) {
      ++warnings_;
      if (config_.strict)
        throw StabilityViolation("step " + std::to_string(step_) + ": energy inequality violated");
    }
  }
  rec.volume_residual = std::abs(normal_displacement(sys.NG, up.dX));
  rec.volume_bound = 10 * config_.solver.tol * tau * res.rhs_norm;
  rec.iterations = res.iterations;
  rec.residual = res.residual;
  rec.lambda = res.lambda;
  rec.energy = energy(tri, vs, coeffs_.rho, u_new, next, params.gamma);
  rec.V_c = rise_velocity(tri, vs, cls_, params, config_.density, u_new);
  rec.elements = static_cast<int>(tri.num_triangles());

  curve_ = refine_interface(next, vol_max_);
  if ((step_ + 1) % config_.self_intersection_every() == 0 && has_self_intersection(curve_))
    throw GeometryError("step " + std::to_string(step_) + ": interface self-intersects");

  rec.area = enclosed_area(curve_);
  rec.y_c = vertical_moment(curve_) / rec.area;
  rec.circularity = 2.0 * std::sqrt(std::numbers::pi * rec.area) / perimeter(curve_);
  rec.ratio = mesh_ratio(curve_);
  rec.interface_vertices = static_cast<int>(curve_.size());

  rho_prev_ = coeffs_.rho;
  u_ = std::move(u_new);
  p_ = res.p;
  lambda_ = res.lambda;
  ++step_;
  t_ = t_next;
  series_.records.push_back(rec);
  return series_.records.back();
}

}  // namespace twophase
