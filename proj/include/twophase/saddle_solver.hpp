#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "twophase/assembly.hpp"

namespace twophase {

struct SolverConfig {
  enum class Method { bicgstab, gmres };
  enum class VelocityPreconditioner { direct, ssor };
  Method method = Method::bicgstab;
  double tol = 1e-10;
  int max_iter = 1000;
  int restart = 50;
  double inner_tol = 1e-12;
  int inner_max_iter = 2000;
  VelocityPreconditioner velocity_preconditioner = VelocityPreconditioner::direct;
  int ssor_sweeps = 3;
  bool project = true;

  void validate() const;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Factorized [[0, -(1/tau) N_G^T], [N_G, A_G]] acting on (kappa, dX).
class InterfaceBlock {
 public:
  InterfaceBlock(const LumpedNormalMatrix& ng, const SpMat& ag, double tau);
  /// b = (b_kappa [K], b_X [2K]).
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  const SpMat& matrix() const { return xi_; }
  std::size_t vertex_count() const { return K_; }

 private:
  std::size_t K_;
  SpMat xi_;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

InterfaceBlock factor_interface_block(const LumpedNormalMatrix& ng, const SpMat& ag, double tau);

/// B u + gamma N [Xi^{-1} (N^T u; 0)]_kappa. With a null block only B u.
Eigen::VectorXd schur_apply(const AssembledSystem& sys, const InterfaceBlock* block, const Eigen::VectorXd& u);

struct SolveResult {
  Eigen::VectorXd u;  // free velocity unknowns
  Eigen::VectorXd p;  // pressure coefficients, zero mean
  double lambda = 0;
  int iterations = 0;
  double residual = 0;  // relative residual of the reduced system
  double rhs_norm = 0;
  bool fallback = false;
  std::vector<double> history;
};

/// Reduced right-hand side g - gamma N [Xi^{-1}(0; A_G X)]_kappa.
Eigen::VectorXd reduced_rhs(const AssembledSystem& sys, const InterfaceBlock* block);

/// Solves the velocity-pressure system (with the enrichment column when present).
/// `p0` holds the initial pressure guess including the enrichment coefficient as last entry.
SolveResult solve_coupled(const AssembledSystem& sys, const InterfaceBlock* block, const SolverConfig& config,
                          const Eigen::VectorXd* p0 = nullptr);

struct InterfaceUpdate {
  Eigen::VectorXd kappa;
  std::vector<Vec2> dX;
};

InterfaceUpdate recover_interface(const InterfaceBlock& block, const AssembledSystem& sys, const Eigen::VectorXd& u);

/// Weighted mean removed from each constant mode of the pressure space.
void normalize_pressure(const PressureSpace& ps, const Eigen::VectorXd& weights, Eigen::VectorXd& p);

/// Lumped product <dX, nu>^h.
double normal_displacement(const LumpedNormalMatrix& ng, const std::vector<Vec2>& dX);

}  // namespace twophase
