#include "twophase/cut_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace twophase {

namespace {

constexpr double kOnEdge = 1e-11;

double tri_area(const std::array<Vec2, 3>& t) { return 0.5 * cross2(t[1] - t[0], t[2] - t[0]); }

double dist_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double s = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + s * d - p).norm();
}

bool proper_crossing(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  const double o1 = cross2(q - p, a - p), o2 = cross2(q - p, b - p);
  const double o3 = cross2(b - a, p - a), o4 = cross2(b - a, q - a);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

/// Uniform grid of curve segments for candidate lookup.
class SegmentGrid {
 public:
  explicit SegmentGrid(const InterfaceCurve& curve) : curve_(curve) {
    lo_ = hi_ = curve.vertex(0);
    double hmax = 0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
      lo_ = lo_.cwiseMin(curve.vertex(k));
      hi_ = hi_.cwiseMax(curve.vertex(k));
      hmax = std::max(hmax, curve.segment_length(k));
    }
    cell_ = std::max(hmax, 1e-3 * std::max((hi_ - lo_).maxCoeff(), 1e-12));
    nx_ = std::max(1, static_cast<int>(std::ceil((hi_.x() - lo_.x()) / cell_)) + 1);
    ny_ = std::max(1, static_cast<int>(std::ceil((hi_.y() - lo_.y()) / cell_)) + 1);
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t j = 0; j < curve.size(); ++j) {
      const Vec2& a = curve.vertex(j);
      const Vec2& b = curve.vertex(curve.next(j));
      const auto [i0, j0] = cell(a.cwiseMin(b));
      const auto [i1, j1] = cell(a.cwiseMax(b));
      for (int jj = j0; jj <= j1; ++jj)
        for (int ii = i0; ii <= i1; ++ii) cells_[jj * nx_ + ii].push_back(static_cast<int>(j));
    }
    stamp_.assign(curve.size(), -1);
  }

  /// Sorted candidate segments whose cells meet the box.
  const std::vector<int>& query(const Vec2& lo, const Vec2& hi, int tag) {
    out_.clear();
    if (hi.x() < lo_.x() || hi.y() < lo_.y() || lo.x() > hi_.x() || lo.y() > hi_.y()) return out_;
    const auto [i0, j0] = cell(lo);
    const auto [i1, j1] = cell(hi);
    for (int jj = j0; jj <= j1; ++jj) {
      for (int ii = i0; ii <= i1; ++ii) {
        for (int s : cells_[jj * nx_ + ii]) {
          if (stamp_[s] != tag) {
            stamp_[s] = tag;
            out_.push_back(s);
          }
        }
      }
    }
    std::sort(out_.begin(), out_.end());
    return out_;
  }

 private:
  std::pair<int, int> cell(const Vec2& p) const {
    const int i = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / cell_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / cell_)), 0, ny_ - 1);
    return {i, j};
  }

  const InterfaceCurve& curve_;
  Vec2 lo_, hi_;
  double cell_ = 1;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
  std::vector<int> stamp_;
  std::vector<int> out_;
};

Side side_by_parity(Side ref, const Vec2& from, const Vec2& to, const std::vector<CutPiece>& pieces) {
  int n = 0;
  for (const CutPiece& p : pieces) n += proper_crossing(from, to, p.a, p.b);
  if (n % 2 == 0) return ref;
  return ref == Side::minus ? Side::plus : Side::minus;
}

double minus_area_rec(const std::array<Vec2, 3>& t, const std::vector<CutPiece>& pieces,
                      const std::vector<Vec2>& normals, int depth, const Vec2& ref_point, Side ref_side,
                      const std::vector<CutPiece>& root_pieces) {
  const double area = tri_area(t);
  if (pieces.empty()) {
    const Side s = side_by_parity(ref_side, ref_point, (t[0] + t[1] + t[2]) / 3.0, root_pieces);
    return s == Side::minus ? area : 0.0;
  }
  if (auto a = cut_area(t, pieces, normals)) return std::clamp(*a, 0.0, area);
  if (depth <= 0) return 0.5 * area;
  int k = 0;
  double best = -1;
  for (int i = 0; i < 3; ++i) {
    const double l = (t[(i + 1) % 3] - t[i]).squaredNorm();
    if (l > best) {
      best = l;
      k = i;
    }
  }
  const Vec2& a = t[k];
  const Vec2& b = t[(k + 1) % 3];
  const Vec2& c = t[(k + 2) % 3];
  const Vec2 m = 0.5 * (a + b);
  double sum = 0;
  for (const std::array<Vec2, 3>& child : {std::array<Vec2, 3>{c, a, m}, std::array<Vec2, 3>{b, c, m}}) {
    std::vector<CutPiece> sub;
    for (const CutPiece& p : pieces) {
      if (auto s = clip_segment_to_triangle(p.a, p.b, child)) sub.push_back({(*s)[0], (*s)[1], p.segment});
    }
    sum += minus_area_rec(child, sub, normals, depth - 1, ref_point, ref_side, root_pieces);
  }
  return sum;
}

}  // namespace

std::size_t ElementClassification::interface_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Side::interface));
}

std::optional<std::array<Vec2, 2>> clip_segment_to_triangle(const Vec2& a, const Vec2& b,
                                                            const std::array<Vec2, 3>& tri) {
  const double orient = tri_area(tri) >= 0 ? 1.0 : -1.0;
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 e = orient * (tri[(k + 1) % 3] - tri[k]);
    const Vec2& p = orient > 0 ? tri[k] : tri[(k + 1) % 3];
    const double el = e.norm();
    const double f0 = cross2(e, a - p) / el;
    const double f1 = cross2(e, d) / el;
    if (std::abs(f1) <= 1e-15 * d.norm()) {
      if (f0 < -1e-15) return std::nullopt;
      if (f0 <= 1e-15 && d.dot(e) <= 0) return std::nullopt;
      continue;
    }
    const double t = -f0 / f1;
    if (f1 > 0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t1 - t0 <= 1e-13) return std::nullopt;
  }
  std::array<Vec2, 2> r{t0 == 0.0 ? a : Vec2(a + t0 * d), t1 == 1.0 ? b : Vec2(a + t1 * d)};
  // Snap endpoints onto nearby triangle edges.
  for (Vec2& q : r) {
    for (int k = 0; k < 3; ++k) {
      const Vec2& p0 = tri[k];
      const Vec2 e = tri[(k + 1) % 3] - p0;
      const double dist = cross2(e, q - p0) / e.norm();
      if (std::abs(dist) <= 1e-12 && std::abs(dist) > 0) q -= dist * Vec2(-e.y(), e.x()) / e.norm();
    }
  }
  return r;
}

Side point_side(const Vec2& p, const InterfaceCurve& curve) {
  int wn = 0;
  const std::size_t K = curve.size();
  for (std::size_t j = 0; j < K; ++j) {
    const Vec2& a = curve.vertex(j);
    const Vec2& b = curve.vertex(curve.next(j));
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross2(b - a, p - a) > 0) ++wn;
    } else if (b.y() <= p.y() && cross2(b - a, p - a) < 0) {
      --wn;
    }
  }
  return wn != 0 ? Side::minus : Side::plus;
}

void cut_pieces(const Triangulation& tri, const InterfaceCurve& curve, std::vector<int>& offsets,
                std::vector<CutPiece>& pieces) {
  SegmentGrid grid(curve);
  offsets.assign(tri.num_triangles() + 1, 0);
  pieces.clear();
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const auto c = tri.corners(e);
    const Vec2 lo = c[0].cwiseMin(c[1]).cwiseMin(c[2]);
    const Vec2 hi = c[0].cwiseMax(c[1]).cwiseMax(c[2]);
    for (int s : grid.query(lo, hi, static_cast<int>(e))) {
      const Vec2& a = curve.vertex(s);
      const Vec2& b = curve.vertex(curve.next(s));
      if (std::max(a.x(), b.x()) < lo.x() || std::min(a.x(), b.x()) > hi.x() ||
          std::max(a.y(), b.y()) < lo.y() || std::min(a.y(), b.y()) > hi.y())
        continue;
      if (auto r = clip_segment_to_triangle(a, b, c)) pieces.push_back({(*r)[0], (*r)[1], s});
    }
    offsets[e + 1] = static_cast<int>(pieces.size());
  }
}

ElementClassification classify_elements(const Triangulation& tri, const InterfaceCurve& curve,
                                        bool with_fractions) {
  ElementClassification cls;
  cut_pieces(tri, curve, cls.offsets, cls.pieces);
  const std::size_t ne = tri.num_triangles();
  cls.labels.resize(ne);
  for (std::size_t e = 0; e < ne; ++e)
    cls.labels[e] = cls.piece_count(e) > 0 ? Side::interface : point_side(tri.centroid(e), curve);
  for (std::size_t e = 0; e < ne; ++e) {
    if (cls.labels[e] == Side::interface) continue;
    for (int n : tri.neighbors[e]) {
      if (n >= 0 && cls.labels[n] != Side::interface && cls.labels[n] != cls.labels[e])
        throw GeometryError("inner and outer elements share an edge without an interface element");
    }
  }
  cls.vertex_side.assign(tri.num_points(), Side::interface);
  for (std::size_t e = 0; e < ne; ++e) {
    if (cls.labels[e] == Side::interface) continue;
    for (int v : tri.triangles[e])
      if (cls.vertex_side[v] == Side::interface) cls.vertex_side[v] = cls.labels[e];
  }
  for (std::size_t v = 0; v < tri.num_points(); ++v)
    if (cls.vertex_side[v] == Side::interface) cls.vertex_side[v] = point_side(tri.points[v], curve);
  cls.minus_fraction.resize(ne);
  for (std::size_t e = 0; e < ne; ++e)
    cls.minus_fraction[e] = cls.labels[e] == Side::minus ? 1.0 : 0.0;
  if (with_fractions) {
    const VolumeEstimate est = approx_minus_volume(tri, cls, curve);
    for (std::size_t e = 0; e < ne; ++e)
      if (cls.labels[e] == Side::interface)
        cls.minus_fraction[e] = std::clamp(est.element_minus_area[e] / tri.area(e), 0.0, 1.0);
    cls.has_fractions = true;
  }
  return cls;
}

std::optional<double> cut_area(const std::array<Vec2, 3>& t, const std::vector<CutPiece>& pieces,
                               const std::vector<Vec2>& normals) {
  const double area = tri_area(t);
  const double diam = std::max({(t[1] - t[0]).norm(), (t[2] - t[1]).norm(), (t[0] - t[2]).norm()});
  std::array<bool, 3> cut{false, false, false};
  for (const CutPiece& p : pieces) {
    for (int k = 0; k < 3; ++k) {
      if (cut[k]) continue;
      const Vec2& a = t[k];
      const Vec2& b = t[(k + 1) % 3];
      cut[k] = dist_to_segment(p.a, a, b) <= kOnEdge * diam || dist_to_segment(p.b, a, b) <= kOnEdge * diam;
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (cut[k]) continue;
    const Vec2& z0 = t[(k + 2) % 3];
    double integral = 0;
    bool pos = false, neg = false;
    for (const CutPiece& p : pieces) {
      const double v = (0.5 * (p.a + p.b) - z0).dot(normals[p.segment]) * (p.b - p.a).norm();
      integral += v;
      pos |= v > 0;
      neg |= v < 0;
    }
    bool outer_free_edge;
    if (std::abs(integral) > 1e-13 * std::abs(area)) outer_free_edge = integral > 0;
    else if (pos != neg) outer_free_edge = pos;
    else continue;
    return outer_free_edge ? 0.5 * integral : std::abs(area) + 0.5 * integral;
  }
  return std::nullopt;
}

double element_minus_area(const std::array<Vec2, 3>& tri, const std::array<Side, 3>& corner_sides,
                          const std::vector<CutPiece>& pieces, const std::vector<Vec2>& normals,
                          int depth) {
  int ref = 0;
  for (int k = 0; k < 3; ++k) {
    bool near = false;
    for (const CutPiece& p : pieces) near |= dist_to_segment(tri[k], p.a, p.b) <= 1e-12;
    if (!near) {
      ref = k;
      break;
    }
  }
  return minus_area_rec(tri, pieces, normals, depth, tri[ref], corner_sides[ref], pieces);
}

VolumeEstimate approx_minus_volume(const Triangulation& tri, const ElementClassification& cls,
                                   const InterfaceCurve& curve, double tol) {
  const double exact = enclosed_area(curve);
  const CurveNormals normals = compute_normals(curve);
  VolumeEstimate est;
  est.element_minus_area.assign(tri.num_triangles(), 0.0);
  double fixed = 0;
  std::vector<int> irregular;
  std::vector<CutPiece> pieces;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    if (cls.labels[e] == Side::minus) {
      est.element_minus_area[e] = tri.area(e);
      fixed += tri.area(e);
    } else if (cls.labels[e] == Side::interface) {
      pieces.assign(cls.pieces_of(e), cls.pieces_of(e) + cls.piece_count(e));
      if (auto a = cut_area(tri.corners(e), pieces, normals.segment)) {
        est.element_minus_area[e] = std::clamp(*a, 0.0, tri.area(e));
        fixed += est.element_minus_area[e];
      } else {
        irregular.push_back(static_cast<int>(e));
      }
    }
  }
  for (int depth = 0; depth <= 40; ++depth) {
    double total = fixed;
    for (int e : irregular) {
      pieces.assign(cls.pieces_of(e), cls.pieces_of(e) + cls.piece_count(e));
      const auto& v = tri.triangles[e];
      const std::array<Side, 3> sides{cls.vertex_side[v[0]], cls.vertex_side[v[1]], cls.vertex_side[v[2]]};
      est.element_minus_area[e] = element_minus_area(tri.corners(e), sides, pieces, normals.segment, depth);
      total += est.element_minus_area[e];
    }
    est.area = total;
    est.depth = depth;
    if (std::abs(total - exact) < tol) return est;
    if (irregular.empty()) break;
  }
  throw GeometryError("inner phase volume tolerance unreachable");
}

void adapt_to_interface(BulkMesh& mesh, const InterfaceCurve& curve, const AdaptConfig& config) {
  const double vf2 = 2.0 * config.vol_fine(mesh.domain()) * (1.0 - 1e-10);
  const double vc_half = 0.5 * config.vol_coarse(mesh.domain()) * (1.0 + 1e-10);
  std::vector<int> offsets;
  std::vector<CutPiece> pieces;
  for (int guard = 0; guard < 10000; ++guard) {
    const Triangulation& tri = mesh.leaves();
    cut_pieces(tri, curve, offsets, pieces);
    const std::size_t ne = tri.num_triangles();
    std::vector<char> touch(ne), near(ne);
    for (std::size_t e = 0; e < ne; ++e) touch[e] = offsets[e + 1] > offsets[e];
    for (std::size_t e = 0; e < ne; ++e) {
      near[e] = touch[e];
      for (int n : tri.neighbors[e]) near[e] |= n >= 0 && touch[n];
    }
    std::vector<int> refine;
    for (std::size_t e = 0; e < ne; ++e)
      if (near[e] && tri.area(e) >= vf2) refine.push_back(static_cast<int>(e));
    if (!refine.empty()) {
      mesh.refine(refine);
      continue;
    }
    if (!config.allow_coarsening) return;
    std::vector<char> coarse(ne);
    for (std::size_t e = 0; e < ne; ++e) coarse[e] = !near[e] && tri.area(e) <= vc_half;
    if (mesh.coarsen(coarse) == 0) return;
  }
  throw HierarchyError("mesh adaptation did not reach a fixed point");
}

}  // namespace twophase
