#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "twophase/cut_geometry.hpp"
#include "twophase/fem_spaces.hpp"

namespace twophase {

using SpMat = Eigen::SparseMatrix<double>;
using BodyForce = std::function<Vec2(const Vec2&, double)>;

struct PhysParams {
  double rho_plus = 1000, rho_minus = 100;
  double mu_plus = 10, mu_minus = 1;
  double gamma = 24.5;
  double beta = 0;
  /// Body force per unit mass (multiplied by the density) and per unit volume.
  BodyForce f1 = [](const Vec2&, double) { return Vec2(0, -0.98); };
  BodyForce f2 = [](const Vec2&, double) { return Vec2(0, 0); };

  void validate() const;
};

enum class DensityStrategy { midpoint, volume_fraction };

struct DiscreteCoefficients {
  std::vector<double> rho;
  std::vector<double> mu;
  /// Previous density projected to the current mesh.
  std::vector<double> rho_prev;
  DensityStrategy strategy = DensityStrategy::midpoint;
};

/// Element densities and viscosities. Without `prev_projected` the previous density is taken
/// equal to the current one.
DiscreteCoefficients discrete_coefficients(const ElementClassification& cls, const PhysParams& params,
                                           DensityStrategy strategy,
                                           const std::vector<double>* prev_projected = nullptr);

/// Per-element value of a two-phase quantity with the given phase values.
std::vector<double> phase_field(const ElementClassification& cls, double minus, double plus,
                                DensityStrategy strategy);

enum BulkTerm : unsigned { kMass = 1, kViscous = 2, kAdvection = 4, kSlipFriction = 8, kAllTerms = 15 };

/// Velocity matrix from the selected terms. With free_only the rows and columns are the free
/// unknowns, otherwise all 2K components (index 2i+r).
SpMat assemble_velocity_matrix(const Triangulation& tri, const VelocitySpace& vs, const DiscreteCoefficients& c,
                               const std::vector<Vec2>& w, double tau, const PhysParams& params,
                               unsigned terms, bool free_only);

/// [C]_{(i,r),q} = -(d_r phi_i, psi_q), rows restricted to free unknowns.
SpMat assemble_divergence(const Triangulation& tri, const VelocitySpace& vs, const PressureSpace& ps);

/// Interface-bulk coupling [N]_{(i,r),l} = <phi_i, chi_l nu_r> by Simpson quadrature on cut pieces.
SpMat assemble_coupling(const Triangulation& tri, const VelocitySpace& vs, const InterfaceCurve& curve,
                        const ElementClassification& cls, bool free_only = true);

/// Enrichment column: -(row sums of the coupling matrix).
Eigen::VectorXd assemble_xfem_column(const SpMat& coupling);

struct AssembledSystem {
  SpMat B;
  SpMat C;
  Eigen::VectorXd D;  // empty without enrichment
  SpMat N;            // coupling, free rows x K
  LumpedNormalMatrix NG;
  SpMat AG;
  Eigen::VectorXd g;
  Eigen::VectorXd X;  // interface positions, interleaved
  Eigen::VectorXd mass_diag;        // diagonal of the velocity mass matrix on free unknowns
  Eigen::VectorXd pressure_weights; // integrals of the pressure basis functions
  PressureSpace pspace;
  double tau = 0;
  double gamma = 0;
  bool xfem() const { return D.size() > 0; }
  std::size_t pressure_columns() const { return C.cols() + (xfem() ? 1 : 0); }
};

struct AssemblyInput {
  const Triangulation* tri = nullptr;
  const VelocitySpace* vs = nullptr;
  const PressureSpace* ps = nullptr;
  const ElementClassification* cls = nullptr;
  const InterfaceCurve* curve = nullptr;
  const DiscreteCoefficients* coeffs = nullptr;
  const std::vector<Vec2>* u_prev = nullptr;  // transferred previous velocity
  double tau = 0;
  double t_next = 0;
  const PhysParams* params = nullptr;
};

AssembledSystem assemble_system(const AssemblyInput& in);

/// (xi u, v) for element-constant xi.
double weighted_mass(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& xi,
                     const std::vector<Vec2>& u, const std::vector<Vec2>& v);
/// (mu D(u), D(u)).
double viscous_dissipation(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& mu,
                           const std::vector<Vec2>& u);
/// (f, u) with f = rho f1 + f2 interpolated at time t.
double forcing_work(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& rho,
                    const PhysParams& params, double t, const std::vector<Vec2>& u);
/// Integral of |u.t|^2 over the slip walls.
double slip_boundary_norm(const Triangulation& tri, const VelocitySpace& vs, const std::vector<Vec2>& u);

}  // namespace twophase
