#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "twophase/bulk_mesh.hpp"
#include "twophase/interface_curve.hpp"

namespace twophase {

namespace p2 {

/// Local nodes: vertices 0,1,2 then midpoints of edges (0,1), (1,2), (2,0).
std::array<double, 6> values(const std::array<double, 3>& l);
/// Gradients from the (constant) gradients of the barycentric coordinates.
std::array<Vec2, 6> gradients(const std::array<double, 3>& l, const std::array<Vec2, 3>& gl);
/// Barycentric gradients of a triangle.
std::array<Vec2, 3> barycentric_gradients(const std::array<Vec2, 3>& t);
std::array<double, 3> barycentric(const std::array<Vec2, 3>& t, const Vec2& p);

}  // namespace p2

enum class PressureElement { p1, p0, p1p0 };

/// Continuous P2 vector velocity. Scalar DOF i < #vertices sits on vertex i, the rest on edge
/// midpoints. Vector component r of DOF i has global index 2i+r.
struct VelocitySpace {
  std::size_t num_vertices = 0;
  std::size_t num_edges = 0;
  std::vector<Vec2> points;
  /// bit 0: x component fixed to zero, bit 1: y component fixed.
  std::vector<std::uint8_t> clamp;
  /// Free unknown for component index 2i+r, or -1.
  std::vector<int> free_index;
  int num_free = 0;

  std::size_t size() const { return points.size(); }
  std::array<int, 6> element_dofs(const Triangulation& tri, std::size_t e) const;

  Eigen::VectorXd restrict(const std::vector<Vec2>& u) const;
  std::vector<Vec2> extend(const Eigen::VectorXd& v) const;
  /// Zeroes clamped components in place.
  void apply_constraints(std::vector<Vec2>& u) const;
};

struct PressureSpace {
  PressureElement element = PressureElement::p1;
  bool xfem = false;
  std::size_t num_vertices = 0;
  std::size_t num_elements = 0;

  /// Unenriched pressure coefficients.
  std::size_t size() const;
  /// Including the enrichment column.
  std::size_t columns() const { return size() + (xfem ? 1 : 0); }
  bool has_p1() const { return element != PressureElement::p0; }
  bool has_p0() const { return element != PressureElement::p1; }
  std::size_t p0_offset() const { return has_p1() ? num_vertices : 0; }
  /// Local pressure DOFs and their basis values at barycentric point l; returns count.
  int local(const Triangulation& tri, std::size_t e, const std::array<double, 3>& l, std::array<int, 4>& dofs,
            std::array<double, 4>& vals) const;
};

VelocitySpace build_velocity_space(const Triangulation& tri);
PressureSpace build_pressure_space(const Triangulation& tri, PressureElement element, bool xfem);

/// Unknowns of one time level.
struct FieldState {
  std::vector<Vec2> U;
  Eigen::VectorXd P;
  double lambda = 0;
  std::vector<double> kappa;
  InterfaceCurve X;
  double t = 0;
};

Vec2 evaluate_velocity(const Triangulation& tri, const VelocitySpace& space, const std::vector<Vec2>& u,
                       std::size_t e, const Vec2& p);

/// Nodal interpolation of a P2 field from old_mesh to new_mesh (I^2).
std::vector<Vec2> interpolate_velocity(const BulkMesh& old_mesh, const std::vector<Vec2>& old_u,
                                       const BulkMesh& new_mesh);

/// Exact element means of a piecewise constant field (I^0).
std::vector<double> project_density(const BulkMesh& old_mesh, const std::vector<double>& old_rho,
                                    const BulkMesh& new_mesh);

/// Pressure carried to a new mesh by evaluation; used as an iterative initial guess.
Eigen::VectorXd transfer_pressure(const BulkMesh& old_mesh, const PressureSpace& old_space,
                                  const Eigen::VectorXd& old_p, const BulkMesh& new_mesh,
                                  const PressureSpace& new_space);

/// P2 nodal interpolant of a vector function.
template <class F>
std::vector<Vec2> interpolate_function(const VelocitySpace& space, F&& f) {
  std::vector<Vec2> u(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) u[i] = f(space.points[i]);
  return u;
}

}  // namespace twophase
