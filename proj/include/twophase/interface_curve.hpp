#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>
#include <string>
#include <vector>

#include "twophase/common.hpp"

namespace twophase {

/// Closed polygonal curve traversed counter-clockwise; the enclosed region is the
/// inner phase. Segment j joins vertex j to vertex (j+1) mod K.
class InterfaceCurve {
 public:
  InterfaceCurve() = default;
  /// Reverses the traversal when the given polygon is clockwise.
  explicit InterfaceCurve(std::vector<Vec2> vertices);

  static InterfaceCurve circle(const Vec2& center, double radius, int count);
  static InterfaceCurve ellipse(const Vec2& center, double ax, double ay, int count);

  std::size_t size() const { return x_.size(); }
  const std::vector<Vec2>& vertices() const { return x_; }
  const Vec2& vertex(std::size_t k) const { return x_[k]; }
  std::size_t next(std::size_t k) const { return k + 1 == x_.size() ? 0 : k + 1; }
  double segment_length(std::size_t j) const { return (x_[next(j)] - x_[j]).norm(); }

  /// New curve X + dx. Fails on a zero-length segment or a flipped orientation.
  InterfaceCurve displaced(const std::vector<Vec2>& dx) const;

 private:
  struct Unchecked {};
  InterfaceCurve(std::vector<Vec2> vertices, Unchecked) : x_(std::move(vertices)) {}
  void check_segments() const;

  std::vector<Vec2> x_;
};

struct CurveNormals {
  std::vector<double> lengths;    // h_j
  std::vector<Vec2> segment;      // nu_j, unit, pointing out of the inner phase
  std::vector<Vec2> vertex;       // omega_k, length weighted average of adjacent nu
};

CurveNormals compute_normals(const InterfaceCurve& curve);

/// Vertex-diagonal lumped normal matrix. Block k is the 2-vector
/// (h_{k-1} nu_{k-1} + h_k nu_k) / 2.
struct LumpedNormalMatrix {
  std::vector<Vec2> blocks;
  /// K x 2K matrix; column 2k+r is coordinate r of vertex k.
  Eigen::SparseMatrix<double> transpose_matrix() const;
};

LumpedNormalMatrix lumped_normal_matrix(const InterfaceCurve& curve);

/// 2K x 2K stiffness matrix of the discrete Laplace-Beltrami operator, interleaved by coordinate.
Eigen::SparseMatrix<double> surface_stiffness(const InterfaceCurve& curve);

/// Vertex curvatures from the lumped curvature identity. Negative on convex inner phases.
std::vector<double> discrete_curvature(const InterfaceCurve& curve);

/// Splits segments of length >= 1.75 vol_max at their midpoints until none remain.
InterfaceCurve refine_interface(const InterfaceCurve& curve, double vol_max);

double mesh_ratio(const InterfaceCurve& curve);
double enclosed_area(const InterfaceCurve& curve);
double perimeter(const InterfaceCurve& curve);
/// Integral of x_2 over the enclosed region.
double vertical_moment(const InterfaceCurve& curve);
bool has_self_intersection(const InterfaceCurve& curve);

void write_snapshot(std::ostream& out, const InterfaceCurve& curve, double t);
InterfaceCurve read_snapshot(std::istream& in, double* t = nullptr);

}  // namespace twophase
