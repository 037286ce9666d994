#include "twophase/bulk_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace twophase {

double Triangulation::area(std::size_t t) const {
  const auto& v = triangles[t];
  return 0.5 * cross2(points[v[1]] - points[v[0]], points[v[2]] - points[v[0]]);
}

Vec2 Triangulation::centroid(std::size_t t) const {
  const auto& v = triangles[t];
  return (points[v[0]] + points[v[1]] + points[v[2]]) / 3.0;
}

std::array<Vec2, 3> Triangulation::corners(std::size_t t) const {
  const auto& v = triangles[t];
  return {points[v[0]], points[v[1]], points[v[2]]};
}

double AdaptConfig::h_fine(const Domain& d) const {
  return std::min(d.width(), d.height()) / n_fine;
}
double AdaptConfig::h_coarse(const Domain& d) const {
  return std::min(d.width(), d.height()) / n_coarse;
}
double AdaptConfig::vol_fine(const Domain& d) const { return 0.5 * h_fine(d) * h_fine(d); }
double AdaptConfig::vol_coarse(const Domain& d) const { return 0.5 * h_coarse(d) * h_coarse(d); }

std::uint64_t BulkMesh::key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

BulkMesh BulkMesh::uniform(const Domain& domain, int n_coarse) {
  if (n_coarse < 1) throw ConfigError("coarse mesh parameter must be positive");
  BulkMesh m;
  m.domain_ = domain;
  const double h = std::min(domain.width(), domain.height()) / n_coarse;
  const int nx = static_cast<int>(std::lround(domain.width() / h));
  const int ny = static_cast<int>(std::lround(domain.height() / h));
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? domain.upper.x() : domain.lower.x() + domain.width() * i / nx;
      const double y = j == ny ? domain.upper.y() : domain.lower.y() + domain.height() * j / ny;
      m.coords_.emplace_back(x, y);
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = vid(i, j), p10 = vid(i + 1, j), p01 = vid(i, j + 1), p11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        m.roots_.push_back(m.new_node({p11, p00, p10}, -1));
        m.roots_.push_back(m.new_node({p00, p11, p01}, -1));
      } else {
        m.roots_.push_back(m.new_node({p10, p01, p00}, -1));
        m.roots_.push_back(m.new_node({p01, p10, p11}, -1));
      }
    }
  }
  for (int r : m.roots_) m.add_leaf_edges(r);
  m.rebuild();
  return m;
}

int BulkMesh::new_node(const std::array<int, 3>& v, int parent) {
  Node n;
  n.v = v;
  n.parent = parent;
  if (!free_nodes_.empty()) {
    const int id = free_nodes_.back();
    free_nodes_.pop_back();
    nodes_[id] = n;
    return id;
  }
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

int BulkMesh::midpoint(int a, int b) {
  Split& s = splits_[key(a, b)];
  if (s.mid >= 0) return s.mid;
  const Vec2 p = 0.5 * (coords_[a] + coords_[b]);
  if (!free_vertices_.empty()) {
    s.mid = free_vertices_.back();
    free_vertices_.pop_back();
    coords_[s.mid] = p;
  } else {
    coords_.push_back(p);
    s.mid = static_cast<int>(coords_.size()) - 1;
  }
  return s.mid;
}

void BulkMesh::add_leaf_edges(int id) {
  const auto& v = nodes_[id].v;
  for (int k = 0; k < 3; ++k) {
    auto [it, inserted] = edge_leaves_.try_emplace(key(v[k], v[(k + 1) % 3]), std::array<int, 2>{-1, -1});
    auto& slot = it->second;
    if (slot[0] < 0) slot[0] = id;
    else if (slot[1] < 0) slot[1] = id;
    else throw HierarchyError("edge shared by more than two leaves");
  }
}

void BulkMesh::remove_leaf_edges(int id) {
  const auto& v = nodes_[id].v;
  for (int k = 0; k < 3; ++k) {
    auto it = edge_leaves_.find(key(v[k], v[(k + 1) % 3]));
    if (it == edge_leaves_.end()) throw HierarchyError("missing leaf edge");
    auto& slot = it->second;
    if (slot[0] == id) slot[0] = slot[1];
    else if (slot[1] != id) throw HierarchyError("leaf edge ownership mismatch");
    slot[1] = -1;
    if (slot[0] < 0) edge_leaves_.erase(it);
  }
}

void BulkMesh::bisect(int id, std::vector<int>& queue) {
  const auto v = nodes_[id].v;
  const int m = midpoint(v[0], v[1]);
  remove_leaf_edges(id);
  const int c0 = new_node({v[2], v[0], m}, id);
  const int c1 = new_node({v[1], v[2], m}, id);
  nodes_[id].child = {c0, c1};
  add_leaf_edges(c0);
  add_leaf_edges(c1);
  Split& s = splits_[key(v[0], v[1])];
  if (s.parents[0] < 0) s.parents[0] = id;
  else s.parents[1] = id;
  auto it = edge_leaves_.find(key(v[0], v[1]));
  if (it != edge_leaves_.end()) {
    for (int n : it->second)
      if (n >= 0) queue.push_back(n);
  }
  for (int c : {c0, c1}) {
    const auto& cv = nodes_[c].v;
    for (int k = 0; k < 3; ++k) {
      if (splits_.count(key(cv[k], cv[(k + 1) % 3]))) {
        queue.push_back(c);
        break;
      }
    }
  }
}

void BulkMesh::refine(const std::vector<int>& marked) {
  std::vector<int> queue;
  queue.reserve(marked.size());
  for (auto it = marked.rbegin(); it != marked.rend(); ++it) queue.push_back(tri_.nodes.at(*it));
  while (!queue.empty()) {
    const int id = queue.back();
    queue.pop_back();
    if (!nodes_[id].alive || !nodes_[id].is_leaf()) continue;
    bisect(id, queue);
  }
  rebuild();
}

bool BulkMesh::on_boundary(int a, int b) const {
  const Vec2& p = coords_[a];
  const Vec2& q = coords_[b];
  return (p.x() == q.x() && (p.x() == domain_.lower.x() || p.x() == domain_.upper.x())) ||
         (p.y() == q.y() && (p.y() == domain_.lower.y() || p.y() == domain_.upper.y()));
}

int BulkMesh::coarsen(const std::vector<char>& marked) {
  auto leaf_marked = [&](int node) {
    if (node < 0 || !nodes_[node].is_leaf()) return false;
    const int l = leaf_of_node_[node];
    return l >= 0 && marked[l];
  };
  std::vector<std::uint64_t> eligible;
  for (const auto& [k, s] : splits_) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    const int need = on_boundary(a, b) ? 1 : 2;
    const int have = (s.parents[0] >= 0) + (s.parents[1] >= 0);
    if (have != need) continue;
    bool ok = true;
    for (int i = 0; i < have && ok; ++i) {
      const Node& p = nodes_[s.parents[i]];
      ok = leaf_marked(p.child[0]) && leaf_marked(p.child[1]);
    }
    if (ok) eligible.push_back(k);
  }
  std::sort(eligible.begin(), eligible.end());
  for (std::uint64_t k : eligible) {
    const Split s = splits_.at(k);
    for (int p : s.parents) {
      if (p < 0) continue;
      for (int c : nodes_[p].child) {
        remove_leaf_edges(c);
        nodes_[c].alive = false;
        free_nodes_.push_back(c);
      }
      nodes_[p].child = {-1, -1};
      add_leaf_edges(p);
    }
    free_vertices_.push_back(s.mid);
    splits_.erase(k);
  }
  if (!eligible.empty()) rebuild();
  return static_cast<int>(eligible.size());
}

void BulkMesh::rebuild() {
  Triangulation t;
  leaf_of_node_.assign(nodes_.size(), -1);
  std::vector<int> vmap(coords_.size(), -1);
  std::unordered_map<std::uint64_t, int> emap;
  emap.reserve(3 * nodes_.size());
  std::vector<int> stack;
  for (auto r = roots_.rbegin(); r != roots_.rend(); ++r) stack.push_back(*r);
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = nodes_[id];
    if (!n.is_leaf()) {
      stack.push_back(n.child[1]);
      stack.push_back(n.child[0]);
      continue;
    }
    const int tidx = static_cast<int>(t.triangles.size());
    leaf_of_node_[id] = tidx;
    t.nodes.push_back(id);
    std::array<int, 3> tv{};
    for (int k = 0; k < 3; ++k) {
      int& local = vmap[n.v[k]];
      if (local < 0) {
        local = static_cast<int>(t.points.size());
        t.points.push_back(coords_[n.v[k]]);
      }
      tv[k] = local;
    }
    t.triangles.push_back(tv);
    std::array<int, 3> te{};
    for (int k = 0; k < 3; ++k) {
      const auto [it, inserted] =
          emap.try_emplace(key(n.v[k], n.v[(k + 1) % 3]), static_cast<int>(t.edges.size()));
      if (inserted) t.edges.push_back({tv[k], tv[(k + 1) % 3]});
      te[k] = it->second;
    }
    t.triangle_edges.push_back(te);
  }
  const std::size_t ne = t.edges.size();
  std::vector<std::array<int, 2>> owners(ne, {-1, -1});
  for (std::size_t e = 0; e < t.triangles.size(); ++e) {
    for (int k = 0; k < 3; ++k) {
      auto& o = owners[t.triangle_edges[e][k]];
      (o[0] < 0 ? o[0] : o[1]) = static_cast<int>(e);
    }
  }
  t.neighbors.assign(t.triangles.size(), {-1, -1, -1});
  t.edge_tags.assign(ne, BoundaryTag::none);
  for (std::size_t e = 0; e < t.triangles.size(); ++e) {
    for (int k = 0; k < 3; ++k) {
      const int ed = t.triangle_edges[e][k];
      const auto& o = owners[ed];
      t.neighbors[e][k] = o[0] == static_cast<int>(e) ? o[1] : o[0];
    }
  }
  for (std::size_t ed = 0; ed < ne; ++ed) {
    if (owners[ed][1] >= 0) continue;
    const Vec2& p = t.points[t.edges[ed][0]];
    const Vec2& q = t.points[t.edges[ed][1]];
    t.edge_tags[ed] = p.y() == q.y() ? BoundaryTag::dirichlet : BoundaryTag::slip;
  }
  tri_ = std::move(t);
  ++revision_;
}

std::array<Vec2, 3> BulkMesh::node_corners(int id) const {
  const auto& v = nodes_[id].v;
  return {coords_[v[0]], coords_[v[1]], coords_[v[2]]};
}

double BulkMesh::node_area(int id) const {
  const auto c = node_corners(id);
  return 0.5 * cross2(c[1] - c[0], c[2] - c[0]);
}

bool BulkMesh::contains(int id, const Vec2& p, double* margin) const {
  const auto c = node_corners(id);
  const double a = cross2(c[1] - c[0], c[2] - c[0]);
  const double l0 = cross2(c[1] - p, c[2] - p) / a;
  const double l1 = cross2(c[2] - p, c[0] - p) / a;
  const double l2 = 1.0 - l0 - l1;
  const double m = std::min({l0, l1, l2});
  if (margin) *margin = m;
  return m >= -1e-12;
}

int BulkMesh::locate_in(int id, const Vec2& p) const {
  if (!contains(id, p, nullptr)) return -1;
  while (!nodes_[id].is_leaf()) {
    const auto& ch = nodes_[id].child;
    double m0 = 0, m1 = 0;
    if (contains(ch[0], p, &m0)) id = ch[0];
    else if (contains(ch[1], p, &m1)) id = ch[1];
    else id = m0 >= m1 ? ch[0] : ch[1];
  }
  return leaf_of_node_[id];
}

int BulkMesh::locate(const Vec2& p) const {
  for (int r : roots_) {
    const int l = locate_in(r, p);
    if (l >= 0) return l;
  }
  throw HierarchyError("point location failed");
}

int BulkMesh::find_cover(const std::array<Vec2, 3>& corners) const {
  const Vec2 g = (corners[0] + corners[1] + corners[2]) / 3.0;
  int id = -1;
  double best = -INFINITY;
  for (int r : roots_) {
    double m = 0;
    contains(r, g, &m);
    if (m > best) {
      best = m;
      id = r;
    }
    if (m > 0) break;
  }
  if (best < -1e-12) throw HierarchyError("element outside the macro triangulation");
  while (true) {
    if (node_corners(id) == corners || nodes_[id].is_leaf()) return id;
    const auto& ch = nodes_[id].child;
    double m0 = 0, m1 = 0;
    contains(ch[0], g, &m0);
    contains(ch[1], g, &m1);
    id = m0 >= m1 ? ch[0] : ch[1];
  }
}

void BulkMesh::validate() const {
  for (const auto& [k, owners] : edge_leaves_) {
    if (owners[1] < 0) {
      const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
      if (!on_boundary(a, b)) throw HierarchyError("hanging or open interior edge");
    }
    if (splits_.count(k)) throw HierarchyError("leaf edge carries a hanging node");
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (!n.alive) continue;
    if (!n.is_leaf()) {
      for (int c : n.child) {
        if (nodes_[c].parent != static_cast<int>(id) || !nodes_[c].alive)
          throw HierarchyError("broken parent link");
      }
      const double diff = node_area(n.child[0]) + node_area(n.child[1]) - node_area(static_cast<int>(id));
      if (std::abs(diff) > 1e-14 * node_area(static_cast<int>(id)) + 1e-300)
        throw HierarchyError("children do not partition parent");
    }
    if (!(node_area(static_cast<int>(id)) > 0)) throw HierarchyError("non-positive element area");
  }
}

}  // namespace twophase
