#include "twophase/fem_spaces.hpp"

#include <algorithm>

namespace twophase {

namespace p2 {

std::array<double, 6> values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

std::array<Vec2, 6> gradients(const std::array<double, 3>& l, const std::array<Vec2, 3>& g) {
  return {(4 * l[0] - 1) * g[0],
          (4 * l[1] - 1) * g[1],
          (4 * l[2] - 1) * g[2],
          4 * (l[0] * g[1] + l[1] * g[0]),
          4 * (l[1] * g[2] + l[2] * g[1]),
          4 * (l[2] * g[0] + l[0] * g[2])};
}

std::array<Vec2, 3> barycentric_gradients(const std::array<Vec2, 3>& t) {
  const double a2 = cross2(t[1] - t[0], t[2] - t[0]);
  std::array<Vec2, 3> g;
  for (int k = 0; k < 3; ++k) {
    const Vec2 e = t[(k + 2) % 3] - t[(k + 1) % 3];
    g[k] = Vec2(-e.y(), e.x()) / a2;
  }
  return g;
}

std::array<double, 3> barycentric(const std::array<Vec2, 3>& t, const Vec2& p) {
  const double a = cross2(t[1] - t[0], t[2] - t[0]);
  const double l0 = cross2(t[1] - p, t[2] - p) / a;
  const double l1 = cross2(t[2] - p, t[0] - p) / a;
  return {l0, l1, 1.0 - l0 - l1};
}

}  // namespace p2

std::array<int, 6> VelocitySpace::element_dofs(const Triangulation& tri, std::size_t e) const {
  const auto& v = tri.triangles[e];
  const auto& ed = tri.triangle_edges[e];
  const int nv = static_cast<int>(num_vertices);
  return {v[0], v[1], v[2], nv + ed[0], nv + ed[1], nv + ed[2]};
}

Eigen::VectorXd VelocitySpace::restrict(const std::vector<Vec2>& u) const {
  Eigen::VectorXd v(num_free);
  for (std::size_t i = 0; i < size(); ++i)
    for (int r = 0; r < 2; ++r)
      if (const int f = free_index[2 * i + r]; f >= 0) v[f] = u[i][r];
  return v;
}

std::vector<Vec2> VelocitySpace::extend(const Eigen::VectorXd& v) const {
  std::vector<Vec2> u(size(), Vec2::Zero());
  for (std::size_t i = 0; i < size(); ++i)
    for (int r = 0; r < 2; ++r)
      if (const int f = free_index[2 * i + r]; f >= 0) u[i][r] = v[f];
  return u;
}

void VelocitySpace::apply_constraints(std::vector<Vec2>& u) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (clamp[i] & 1) u[i].x() = 0;
    if (clamp[i] & 2) u[i].y() = 0;
  }
}

std::size_t PressureSpace::size() const {
  switch (element) {
    case PressureElement::p1: return num_vertices;
    case PressureElement::p0: return num_elements;
    case PressureElement::p1p0: return num_vertices + num_elements;
  }
  return 0;
}

int PressureSpace::local(const Triangulation& tri, std::size_t e, const std::array<double, 3>& l,
                         std::array<int, 4>& dofs, std::array<double, 4>& vals) const {
  int n = 0;
  if (has_p1()) {
    for (int k = 0; k < 3; ++k) {
      dofs[n] = tri.triangles[e][k];
      vals[n++] = l[k];
    }
  }
  if (has_p0()) {
    dofs[n] = static_cast<int>(p0_offset() + e);
    vals[n++] = 1.0;
  }
  return n;
}

VelocitySpace build_velocity_space(const Triangulation& tri) {
  VelocitySpace s;
  s.num_vertices = tri.num_points();
  s.num_edges = tri.num_edges();
  s.points = tri.points;
  for (const auto& ed : tri.edges) s.points.push_back(0.5 * (tri.points[ed[0]] + tri.points[ed[1]]));
  s.clamp.assign(s.size(), 0);
  for (std::size_t ed = 0; ed < tri.num_edges(); ++ed) {
    const BoundaryTag tag = tri.edge_tags[ed];
    if (tag == BoundaryTag::none) continue;
    std::uint8_t bits = 3;
    if (tag == BoundaryTag::slip) {
      const Vec2 d = tri.points[tri.edges[ed][1]] - tri.points[tri.edges[ed][0]];
      bits = d.x() == 0 ? 1 : 2;
    }
    s.clamp[tri.edges[ed][0]] |= bits;
    s.clamp[tri.edges[ed][1]] |= bits;
    s.clamp[s.num_vertices + ed] |= bits;
  }
  s.free_index.assign(2 * s.size(), -1);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int r = 0; r < 2; ++r)
      if (!(s.clamp[i] & (1 << r))) s.free_index[2 * i + r] = s.num_free++;
  return s;
}

PressureSpace build_pressure_space(const Triangulation& tri, PressureElement element, bool xfem) {
  PressureSpace p;
  p.element = element;
  p.xfem = xfem;
  p.num_vertices = tri.num_points();
  p.num_elements = tri.num_triangles();
  return p;
}

Vec2 evaluate_velocity(const Triangulation& tri, const VelocitySpace& space, const std::vector<Vec2>& u,
                       std::size_t e, const Vec2& p) {
  const auto l = p2::barycentric(tri.corners(e), p);
  const auto phi = p2::values(l);
  const auto dofs = space.element_dofs(tri, e);
  Vec2 r = Vec2::Zero();
  for (int k = 0; k < 6; ++k) r += phi[k] * u[dofs[k]];
  return r;
}

std::vector<Vec2> interpolate_velocity(const BulkMesh& old_mesh, const std::vector<Vec2>& old_u,
                                       const BulkMesh& new_mesh) {
  const Triangulation& ot = old_mesh.leaves();
  const Triangulation& nt = new_mesh.leaves();
  const VelocitySpace os = build_velocity_space(ot);
  const VelocitySpace ns = build_velocity_space(nt);
  if (old_u.size() != os.size()) throw HierarchyError("velocity size does not match the old mesh");
  std::vector<Vec2> u(ns.size(), Vec2::Zero());
  std::vector<char> done(ns.size(), 0);
  for (std::size_t e = 0; e < nt.num_triangles(); ++e) {
    const auto corners = nt.corners(e);
    const auto ndofs = ns.element_dofs(nt, e);
    const int cover = old_mesh.find_cover(corners);
    const int leaf = old_mesh.leaf_index(cover);
    if (leaf >= 0 && old_mesh.node_corners(cover) == corners) {
      const auto odofs = os.element_dofs(ot, leaf);
      for (int k = 0; k < 6; ++k) {
        if (!done[ndofs[k]]) {
          u[ndofs[k]] = old_u[odofs[k]];
          done[ndofs[k]] = 1;
        }
      }
      continue;
    }
    for (int k = 0; k < 6; ++k) {
      if (done[ndofs[k]]) continue;
      const Vec2& p = ns.points[ndofs[k]];
      int l = leaf >= 0 ? leaf : old_mesh.locate_in(cover, p);
      if (l < 0) l = old_mesh.locate(p);
      u[ndofs[k]] = evaluate_velocity(ot, os, old_u, l, p);
      done[ndofs[k]] = 1;
    }
  }
  ns.apply_constraints(u);
  return u;
}

namespace {

double subtree_integral(const BulkMesh& mesh, int node, const std::vector<double>& rho) {
  const int l = mesh.leaf_index(node);
  if (l >= 0) return rho[l] * mesh.leaves().area(l);
  const auto& ch = mesh.node(node).child;
  return subtree_integral(mesh, ch[0], rho) + subtree_integral(mesh, ch[1], rho);
}

}  // namespace

std::vector<double> project_density(const BulkMesh& old_mesh, const std::vector<double>& old_rho,
                                    const BulkMesh& new_mesh) {
  const Triangulation& nt = new_mesh.leaves();
  std::vector<double> rho(nt.num_triangles());
  for (std::size_t e = 0; e < nt.num_triangles(); ++e) {
    const int cover = old_mesh.find_cover(nt.corners(e));
    const int leaf = old_mesh.leaf_index(cover);
    rho[e] = leaf >= 0 ? old_rho[leaf] : subtree_integral(old_mesh, cover, old_rho) / old_mesh.node_area(cover);
  }
  return rho;
}

Eigen::VectorXd transfer_pressure(const BulkMesh& old_mesh, const PressureSpace& old_space,
                                  const Eigen::VectorXd& old_p, const BulkMesh& new_mesh,
                                  const PressureSpace& new_space) {
  const Triangulation& ot = old_mesh.leaves();
  const Triangulation& nt = new_mesh.leaves();
  auto eval = [&](const Vec2& x, bool want_p1, bool want_p0) {
    const int l = old_mesh.locate(x);
    const auto bc = p2::barycentric(ot.corners(l), x);
    double v = 0;
    if (old_space.has_p1() && want_p1)
      for (int k = 0; k < 3; ++k) v += bc[k] * old_p[ot.triangles[l][k]];
    if (old_space.has_p0() && want_p0) v += old_p[old_space.p0_offset() + l];
    return v;
  };
  Eigen::VectorXd p = Eigen::VectorXd::Zero(new_space.size());
  const bool both = new_space.element == PressureElement::p1p0;
  if (new_space.has_p1())
    for (std::size_t v = 0; v < nt.num_points(); ++v) p[v] = eval(nt.points[v], true, !both);
  if (new_space.has_p0())
    for (std::size_t e = 0; e < nt.num_triangles(); ++e)
      p[new_space.p0_offset() + e] = eval(nt.centroid(e), !both, true);
  return p;
}

}  // namespace twophase
