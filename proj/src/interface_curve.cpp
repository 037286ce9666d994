#include "twophase/interface_curve.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace twophase {

namespace {

double signed_area(const std::vector<Vec2>& x) {
  double a = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) a += cross2(x[k], x[(k + 1) % x.size()]);
  return 0.5 * a;
}

int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d = cross2(b - a, c - a);
  return (d > 0) - (d < 0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

InterfaceCurve::InterfaceCurve(std::vector<Vec2> vertices) : x_(std::move(vertices)) {
  if (x_.size() < 3) throw GeometryError("interface needs at least 3 vertices");
  check_segments();
  if (signed_area(x_) < 0) std::reverse(x_.begin(), x_.end());
}

InterfaceCurve InterfaceCurve::circle(const Vec2& center, double radius, int count) {
  return ellipse(center, radius, radius, count);
}

InterfaceCurve InterfaceCurve::ellipse(const Vec2& center, double ax, double ay, int count) {
  std::vector<Vec2> x(count);
  for (int k = 0; k < count; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / count;
    x[k] = center + Vec2(ax * std::cos(phi), ay * std::sin(phi));
  }
  return InterfaceCurve(std::move(x));
}

void InterfaceCurve::check_segments() const {
  for (std::size_t j = 0; j < x_.size(); ++j) {
    if (!(segment_length(j) > 0.0))
      throw GeometryError("zero-length interface segment " + std::to_string(j));
  }
}

InterfaceCurve InterfaceCurve::displaced(const std::vector<Vec2>& dx) const {
  if (dx.size() != x_.size()) throw GeometryError("displacement size mismatch");
  std::vector<Vec2> y(x_.size());
  for (std::size_t k = 0; k < x_.size(); ++k) y[k] = x_[k] + dx[k];
  InterfaceCurve c(std::move(y), Unchecked{});
  c.check_segments();
  if (!(signed_area(c.x_) > 0)) throw GeometryError("interface orientation flipped");
  return c;
}

CurveNormals compute_normals(const InterfaceCurve& curve) {
  const std::size_t K = curve.size();
  CurveNormals n;
  n.lengths.resize(K);
  n.segment.resize(K);
  n.vertex.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    const Vec2 d = curve.vertex(curve.next(j)) - curve.vertex(j);
    const double h = d.norm();
    if (!(h > 0)) throw GeometryError("zero-length interface segment " + std::to_string(j));
    n.lengths[j] = h;
    n.segment[j] = Vec2(d.y(), -d.x()) / h;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t jl = (k + K - 1) % K;
    n.vertex[k] = (n.lengths[jl] * n.segment[jl] + n.lengths[k] * n.segment[k]) /
                  (n.lengths[jl] + n.lengths[k]);
  }
  return n;
}

Eigen::SparseMatrix<double> LumpedNormalMatrix::transpose_matrix() const {
  const Eigen::Index K = static_cast<Eigen::Index>(blocks.size());
  Eigen::SparseMatrix<double> m(K, 2 * K);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * K);
  for (Eigen::Index k = 0; k < K; ++k) {
    t.emplace_back(k, 2 * k, blocks[k].x());
    t.emplace_back(k, 2 * k + 1, blocks[k].y());
  }
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

LumpedNormalMatrix lumped_normal_matrix(const InterfaceCurve& curve) {
  const CurveNormals n = compute_normals(curve);
  const std::size_t K = curve.size();
  LumpedNormalMatrix m;
  m.blocks.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t jl = (k + K - 1) % K;
    m.blocks[k] = 0.5 * (n.lengths[jl] * n.segment[jl] + n.lengths[k] * n.segment[k]);
  }
  return m;
}

Eigen::SparseMatrix<double> surface_stiffness(const InterfaceCurve& curve) {
  const Eigen::Index K = static_cast<Eigen::Index>(curve.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(8 * K);
  for (Eigen::Index j = 0; j < K; ++j) {
    const Eigen::Index a = j, b = (j + 1) % K;
    const double s = 1.0 / curve.segment_length(j);
    for (int r = 0; r < 2; ++r) {
      t.emplace_back(2 * a + r, 2 * a + r, s);
      t.emplace_back(2 * b + r, 2 * b + r, s);
      t.emplace_back(2 * a + r, 2 * b + r, -s);
      t.emplace_back(2 * b + r, 2 * a + r, -s);
    }
  }
  Eigen::SparseMatrix<double> m(2 * K, 2 * K);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<double> discrete_curvature(const InterfaceCurve& curve) {
  const std::size_t K = curve.size();
  const LumpedNormalMatrix N = lumped_normal_matrix(curve);
  const CurveNormals n = compute_normals(curve);
  std::vector<double> kappa(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (n.vertex[k].norm() < 1e-12)
      throw AssumptionAViolation("singular vertex normal at vertex " + std::to_string(k));
    const std::size_t kl = (k + K - 1) % K, kr = curve.next(k);
    const Vec2 ax = (curve.vertex(k) - curve.vertex(kl)) / curve.segment_length(kl) +
                    (curve.vertex(k) - curve.vertex(kr)) / curve.segment_length(k);
    const Vec2& b = N.blocks[k];
    kappa[k] = -ax.dot(b) / b.squaredNorm();
  }
  return kappa;
}

InterfaceCurve refine_interface(const InterfaceCurve& curve, double vol_max) {
  const double threshold = 1.75 * vol_max;
  std::vector<Vec2> x = curve.vertices();
  bool changed = true, any = false;
  while (changed) {
    changed = false;
    std::vector<Vec2> y;
    y.reserve(2 * x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const Vec2& a = x[j];
      const Vec2& b = x[(j + 1) % x.size()];
      y.push_back(a);
      if ((b - a).norm() >= threshold) {
        y.push_back(0.5 * (a + b));
        changed = true;
      }
    }
    if (changed) {
      x.swap(y);
      any = true;
    }
  }
  return any ? InterfaceCurve(std::move(x)) : curve;
}

double mesh_ratio(const InterfaceCurve& curve) {
  double hmin = INFINITY, hmax = 0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const double h = curve.segment_length(j);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  return hmax / hmin;
}

double enclosed_area(const InterfaceCurve& curve) {
  const double a = signed_area(curve.vertices());
  if (!(a > 0)) throw GeometryError("interface encloses non-positive area");
  return a;
}

double perimeter(const InterfaceCurve& curve) {
  double l = 0;
  for (std::size_t j = 0; j < curve.size(); ++j) l += curve.segment_length(j);
  return l;
}

double vertical_moment(const InterfaceCurve& curve) {
  // Divergence theorem with the field (0, y^2/2); exact for straight segments.
  double m = 0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const Vec2& a = curve.vertex(j);
    const Vec2& b = curve.vertex(curve.next(j));
    const double dxdt = b.x() - a.x();
    m -= dxdt * (a.y() * a.y() + a.y() * b.y() + b.y() * b.y()) / 6.0;
  }
  return m;
}

bool has_self_intersection(const InterfaceCurve& curve) {
  const std::size_t K = curve.size();
  std::vector<Vec2> lo(K), hi(K);
  for (std::size_t j = 0; j < K; ++j) {
    const Vec2& a = curve.vertex(j);
    const Vec2& b = curve.vertex(curve.next(j));
    lo[j] = a.cwiseMin(b);
    hi[j] = a.cwiseMax(b);
  }
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 2; j < K; ++j) {
      if (i == 0 && j == K - 1) continue;
      if ((lo[i].array() > hi[j].array()).any() || (lo[j].array() > hi[i].array()).any()) continue;
      if (segments_intersect(curve.vertex(i), curve.vertex(curve.next(i)), curve.vertex(j),
                             curve.vertex(curve.next(j))))
        return true;
    }
  }
  return false;
}

void write_snapshot(std::ostream& out, const InterfaceCurve& curve, double t) {
  out << std::setprecision(17) << "# t=" << t << " K=" << curve.size() << '\n';
  for (const Vec2& x : curve.vertices()) out << x.x() << ' ' << x.y() << '\n';
}

InterfaceCurve read_snapshot(std::istream& in, double* t) {
  std::string header;
  if (!std::getline(in, header)) throw GeometryError("empty snapshot");
  double time = 0;
  std::size_t count = 0;
  {
    std::istringstream hs(header);
    std::string hash, tf, kf;
    hs >> hash >> tf >> kf;
    if (hash != "#" || tf.rfind("t=", 0) != 0 || kf.rfind("K=", 0) != 0)
      throw GeometryError("malformed snapshot header");
    time = std::stod(tf.substr(2));
    count = std::stoul(kf.substr(2));
  }
  std::vector<Vec2> x(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (!(in >> x[k].x() >> x[k].y())) throw GeometryError("truncated snapshot");
  }
  if (t) *t = time;
  return InterfaceCurve(std::move(x));
}

}  // namespace twophase
