#pragma once

#include <array>
#include <optional>
#include <vector>

#include "twophase/bulk_mesh.hpp"
#include "twophase/interface_curve.hpp"

namespace twophase {

enum class Side : signed char { minus = -1, interface = 0, plus = 1 };

/// Part of interface segment `segment` lying in one element.
struct CutPiece {
  Vec2 a, b;
  int segment = -1;
};

struct ElementClassification {
  std::vector<Side> labels;
  /// Pieces of element e are pieces[offsets[e] .. offsets[e+1]).
  std::vector<int> offsets;
  std::vector<CutPiece> pieces;
  std::vector<Side> vertex_side;
  /// Inner-phase fraction; 1 on minus and 0 on plus elements.
  std::vector<double> minus_fraction;
  bool has_fractions = false;

  std::size_t piece_count(std::size_t e) const { return offsets[e + 1] - offsets[e]; }
  const CutPiece* pieces_of(std::size_t e) const { return pieces.data() + offsets[e]; }
  std::size_t interface_count() const;
};

/// Portion of segment [a, b] inside the closed triangle; empty when of zero length.
std::optional<std::array<Vec2, 2>> clip_segment_to_triangle(const Vec2& a, const Vec2& b,
                                                            const std::array<Vec2, 3>& tri);

/// Side of p relative to the curve, by winding number.
Side point_side(const Vec2& p, const InterfaceCurve& curve);

/// Positive-length pieces of the curve in every leaf element (offsets + flat list).
void cut_pieces(const Triangulation& tri, const InterfaceCurve& curve, std::vector<int>& offsets,
                std::vector<CutPiece>& pieces);

/// Labels, pieces, vertex sides and (when requested) inner-phase fractions.
ElementClassification classify_elements(const Triangulation& tri, const InterfaceCurve& curve,
                                        bool with_fractions = true);

/// Inner-phase area of a regularly cut triangle (some edge free of crossings) from the divergence
/// theorem. `pieces` carry the outward normals of the inner phase. Returns nullopt when no edge
/// is free of crossings or the side of the free edge cannot be decided.
std::optional<double> cut_area(const std::array<Vec2, 3>& tri, const std::vector<CutPiece>& pieces,
                               const std::vector<Vec2>& segment_normals);

/// Inner-phase area of one element, bisecting non regularly cut parts down to `depth` levels;
/// unresolved parts at the bottom contribute half their area.
double element_minus_area(const std::array<Vec2, 3>& tri, const std::array<Side, 3>& corner_sides,
                          const std::vector<CutPiece>& pieces, const std::vector<Vec2>& segment_normals,
                          int depth);

struct VolumeEstimate {
  double area = 0;
  int depth = 0;
  std::vector<double> element_minus_area;
};

/// Sum of inner-phase areas over the mesh, deepening the local bisection until the result
/// matches the enclosed area to `tol`.
VolumeEstimate approx_minus_volume(const Triangulation& tri, const ElementClassification& cls,
                                   const InterfaceCurve& curve, double tol = 1e-8);

}  // namespace twophase
