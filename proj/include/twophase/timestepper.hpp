#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twophase/saddle_solver.hpp"

namespace twophase {

struct RunConfig {
  std::string preset = "hysing1";
  PhysParams params;
  Domain domain;
  Vec2 center{0.5, 0.5};
  double radius = 0.25;
  double final_time = 3.0;
  int level_fine = 5;    // N_f = 2^level_fine, initial interface vertices 2^level_fine
  int level_coarse = 2;  // N_c = 2^level_coarse
  int timestep_divisor = 1;
  PressureElement element = PressureElement::p1;
  bool xfem = true;
  DensityStrategy density = DensityStrategy::midpoint;
  /// Disables coarsening and turns monitoring warnings into errors.
  bool strict = false;
  /// Keeps the initial adapted mesh for the whole run.
  bool fixed_mesh = false;
  SolverConfig solver;
  int snapshot_every = 100;
  std::string outdir;
  /// Replaces the initial circle when set.
  std::optional<InterfaceCurve> initial_curve;

  double tau() const { return 1e-3 / timestep_divisor; }
  int steps() const;
  AdaptConfig adapt() const;
  int self_intersection_every() const { return strict ? 1 : 10; }
  void validate() const;
};

struct StepRecord {
  int step = 0;
  double t = 0;
  double area = 0;
  double y_c = 0;
  double circularity = 0;
  double V_c = 0;
  double energy = 0;
  double ratio = 0;
  double lambda = 0;
  /// Right minus left side of the one-step energy inequality, and the right side.
  double margin = 0;
  double margin_scale = 0;
  /// |<dX, nu>^h| and the bound 10 tol tau |b|.
  double volume_residual = 0;
  double volume_bound = 0;
  int iterations = 0;
  double residual = 0;
  int elements = 0;
  int interface_vertices = 0;
};

struct BenchmarkSummary {
  double L_loss = 0;
  double circ_min = 0, t_circ_min = 0;
  double Vc_max = 0, t_Vc_max = 0;
  std::optional<double> Vc_max2, t_Vc_max2;
  double yc_final = 0;
};

struct BenchmarkSeries {
  double initial_area = 0;
  std::vector<StepRecord> records;
  /// With split_maxima the rise velocity maxima before and after the deepest intermediate
  /// dip are reported separately.
  BenchmarkSummary summary(bool split_maxima) const;
};

/// Kinetic plus surface energy.
double energy(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& rho,
              const std::vector<Vec2>& u, const InterfaceCurve& curve, double gamma);

/// Rise velocity (rho_- U_2, 1) / (rho_-, 1) with the outer density set to zero.
double rise_velocity(const Triangulation& tri, const VelocitySpace& vs, const ElementClassification& cls,
                     const PhysParams& params, DensityStrategy strategy, const std::vector<Vec2>& u);

struct StabilityTerms {
  double lhs = 0;
  double rhs = 0;
  double margin() const { return rhs - lhs; }
};

class Simulation {
 public:
  explicit Simulation(RunConfig config);

  const StepRecord& step();
  bool finished() const { return step_ >= config_.steps(); }
  int step_index() const { return step_; }
  double time() const { return t_; }

  const RunConfig& config() const { return config_; }
  const BulkMesh& mesh() const { return mesh_; }
  const InterfaceCurve& curve() const { return curve_; }
  const std::vector<Vec2>& velocity() const { return u_; }
  const Eigen::VectorXd& pressure() const { return p_; }
  const ElementClassification& classification() const { return cls_; }
  /// Density and viscosity of the last step on mesh().
  const DiscreteCoefficients& coefficients() const { return coeffs_; }
  const BenchmarkSeries& series() const { return series_; }
  /// Number of monitoring warnings (stability margin, hypothesis of the multi-step bound).
  int warnings() const { return warnings_; }
  /// Left and right side of ((I0 rho^{m-1}) I2 U^m, I2 U^m) <= (rho^{m-1} U^m, U^m) at the last step.
  std::pair<double, double> transfer_energies() const { return transfer_energy_; }

 private:
  RunConfig config_;
  AdaptConfig adapt_;
  BulkMesh mesh_;
  InterfaceCurve curve_;
  double vol_max_ = 0;
  std::vector<Vec2> u_;
  Eigen::VectorXd p_;
  double lambda_ = 0;
  std::vector<double> rho_prev_;  // density of the previous step on mesh_
  ElementClassification cls_;
  DiscreteCoefficients coeffs_;
  BenchmarkSeries series_;
  int step_ = 0;
  double t_ = 0;
  int warnings_ = 0;
  std::pair<double, double> transfer_energy_{0, 0};
};

}  // namespace twophase
