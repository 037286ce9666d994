#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "twophase/common.hpp"

namespace twophase {

class InterfaceCurve;

/// Axis-aligned rectangle.
struct Domain {
  Vec2 lower{0.0, 0.0};
  Vec2 upper{1.0, 2.0};
  double width() const { return upper.x() - lower.x(); }
  double height() const { return upper.y() - lower.y(); }
  double area() const { return width() * height(); }
};

/// Horizontal walls carry no-slip data, vertical walls free-slip.
enum class BoundaryTag : std::uint8_t { none, dirichlet, slip };

/// Flat view of the leaf elements. Local vertex order is counter-clockwise;
/// edge k of a triangle joins local vertices k and (k+1) mod 3.
struct Triangulation {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<std::array<int, 2>> edges;
  std::vector<BoundaryTag> edge_tags;
  /// Element across local edge k, or -1 on the boundary.
  std::vector<std::array<int, 3>> neighbors;
  /// Hierarchy node of each leaf.
  std::vector<int> nodes;

  std::size_t num_triangles() const { return triangles.size(); }
  std::size_t num_points() const { return points.size(); }
  std::size_t num_edges() const { return edges.size(); }
  double area(std::size_t t) const;
  Vec2 centroid(std::size_t t) const;
  std::array<Vec2, 3> corners(std::size_t t) const;
};

struct AdaptConfig {
  int n_fine = 32;
  int n_coarse = 4;
  bool allow_coarsening = true;

  /// h_f, h_c for a domain with half minimal side H.
  double h_fine(const Domain& d) const;
  double h_coarse(const Domain& d) const;
  double vol_fine(const Domain& d) const;
  double vol_coarse(const Domain& d) const;
};

/// Conforming triangulation refined by newest vertex bisection. Each node stores
/// vertices (a, b, c) with refinement edge a-b; its children are (c, a, m) and (b, c, m).
class BulkMesh {
 public:
  struct Node {
    std::array<int, 3> v{};
    int parent = -1;
    std::array<int, 2> child{-1, -1};
    bool alive = true;
    bool is_leaf() const { return child[0] < 0; }
  };

  BulkMesh() = default;

  /// Uniform mesh of squares of side h_c = 2H / n_coarse, each split along a diagonal
  /// in a union-jack pattern.
  static BulkMesh uniform(const Domain& domain, int n_coarse);

  const Domain& domain() const { return domain_; }
  const Triangulation& leaves() const { return tri_; }
  std::size_t num_elements() const { return tri_.triangles.size(); }
  /// Incremented whenever the leaf set changes.
  std::uint64_t revision() const { return revision_; }
  const Node& node(int id) const { return nodes_[id]; }
  const Vec2& vertex(int id) const { return coords_[id]; }
  const std::vector<int>& roots() const { return roots_; }

  /// Bisects the given leaves (indices into leaves()) plus the closure needed for conformity.
  void refine(const std::vector<int>& marked);
  /// Undoes bisections whose whole patch of children is marked. Returns number of patches removed.
  int coarsen(const std::vector<char>& marked);

  /// Leaf index of an element containing p (first hit of a depth-first descent).
  int locate(const Vec2& p) const;
  /// Leaf element of the subtree of `node` containing p; -1 when p is outside.
  int locate_in(int node, const Vec2& p) const;
  /// Deepest node whose triangle contains the triangle with the given corners (in node order),
  /// stopping at a geometrically identical node or at a leaf.
  int find_cover(const std::array<Vec2, 3>& corners) const;
  /// Leaf index of a leaf node, -1 otherwise.
  int leaf_index(int node) const { return leaf_of_node_[node]; }
  std::array<Vec2, 3> node_corners(int node) const;
  double node_area(int node) const;

  /// Checks conformity and hierarchy consistency; throws HierarchyError.
  void validate() const;

 private:
  static std::uint64_t key(int a, int b);
  int new_node(const std::array<int, 3>& v, int parent);
  int midpoint(int a, int b);
  void bisect(int id, std::vector<int>& queue);
  bool on_boundary(int a, int b) const;
  bool contains(int node, const Vec2& p, double* margin) const;
  void rebuild();
  void add_leaf_edges(int id);
  void remove_leaf_edges(int id);

  Domain domain_;
  std::vector<Vec2> coords_;
  std::vector<int> free_vertices_;
  std::vector<Node> nodes_;
  std::vector<int> free_nodes_;
  std::vector<int> roots_;
  struct Split {
    int mid = -1;
    std::array<int, 2> parents{-1, -1};
  };
  std::unordered_map<std::uint64_t, Split> splits_;
  /// Leaf nodes adjacent to each edge of the current leaf set.
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_leaves_;
  std::vector<int> leaf_of_node_;
  Triangulation tri_;
  std::uint64_t revision_ = 0;
};

/// Marks, bisects and coarsens until a fixed point is reached.
void adapt_to_interface(BulkMesh& mesh, const InterfaceCurve& curve, const AdaptConfig& config);

}  // namespace twophase
