#include "twophase/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "twophase/quadrature.hpp"

namespace twophase {

namespace {

using Trip = Eigen::Triplet<double>;

struct ElementQuad {
  std::array<std::array<double, 6>, 7> phi;
  std::array<std::array<Vec2, 6>, 7> dphi;
  std::array<double, 7> w;
};

ElementQuad element_quadrature(const std::array<Vec2, 3>& t) {
  ElementQuad q;
  const auto gl = p2::barycentric_gradients(t);
  const double area = 0.5 * cross2(t[1] - t[0], t[2] - t[0]);
  const auto& rule = quad::triangle7();
  for (int k = 0; k < 7; ++k) {
    const std::array<double, 3> l{rule[k].l0, rule[k].l1, rule[k].l2};
    q.phi[k] = p2::values(l);
    q.dphi[k] = p2::gradients(l, gl);
    q.w[k] = rule[k].w * area;
  }
  return q;
}

/// Slip-wall edges with their three DOFs (endpoints, midpoint) and the tangential component.
template <class F>
void for_slip_edges(const Triangulation& tri, const VelocitySpace& vs, F&& f) {
  for (std::size_t ed = 0; ed < tri.num_edges(); ++ed) {
    if (tri.edge_tags[ed] != BoundaryTag::slip) continue;
    const auto& v = tri.edges[ed];
    const Vec2 d = tri.points[v[1]] - tri.points[v[0]];
    const int r = std::abs(d.x()) > std::abs(d.y()) ? 0 : 1;
    f(std::array<int, 3>{v[0], v[1], static_cast<int>(vs.num_vertices + ed)}, r, d.norm());
  }
}

std::array<double, 3> edge_basis(double s) { return {(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)}; }

}  // namespace

void PhysParams::validate() const {
  if (!(mu_plus > 0 && mu_minus > 0)) throw ConfigError("viscosities must be positive");
  if (!(rho_plus >= 0 && rho_minus >= 0)) throw ConfigError("densities must be non-negative");
  if (!(gamma >= 0)) throw ConfigError("surface tension must be non-negative");
  if (!(beta >= 0)) throw ConfigError("slip coefficient must be non-negative");
}

std::vector<double> phase_field(const ElementClassification& cls, double minus, double plus,
                                DensityStrategy strategy) {
  if (strategy == DensityStrategy::volume_fraction && !cls.has_fractions)
    throw ConfigError("volume fraction strategy needs cut areas");
  std::vector<double> v(cls.labels.size());
  for (std::size_t e = 0; e < v.size(); ++e) {
    switch (cls.labels[e]) {
      case Side::minus: v[e] = minus; break;
      case Side::plus: v[e] = plus; break;
      case Side::interface:
        if (strategy == DensityStrategy::midpoint) v[e] = 0.5 * (minus + plus);
        else v[e] = cls.minus_fraction[e] * minus + (1 - cls.minus_fraction[e]) * plus;
        break;
    }
  }
  return v;
}

DiscreteCoefficients discrete_coefficients(const ElementClassification& cls, const PhysParams& params,
                                           DensityStrategy strategy, const std::vector<double>* prev_projected) {
  DiscreteCoefficients c;
  c.strategy = strategy;
  c.rho = phase_field(cls, params.rho_minus, params.rho_plus, strategy);
  c.mu = phase_field(cls, params.mu_minus, params.mu_plus, strategy);
  c.rho_prev = prev_projected ? *prev_projected : c.rho;
  if (c.rho_prev.size() != c.rho.size()) throw ConfigError("previous density does not match the mesh");
  return c;
}

SpMat assemble_velocity_matrix(const Triangulation& tri, const VelocitySpace& vs, const DiscreteCoefficients& c,
                               const std::vector<Vec2>& w, double tau, const PhysParams& params,
                               unsigned terms, bool free_only) {
  if (!(tau > 0)) throw ConfigError("time step must be positive");
  const int n = free_only ? vs.num_free : static_cast<int>(2 * vs.size());
  auto index = [&](int dof, int r) { return free_only ? vs.free_index[2 * dof + r] : 2 * dof + r; };
  std::vector<Trip> trips;
  trips.reserve(tri.num_triangles() * 144);
  const bool advect = (terms & kAdvection) && !w.empty();
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const ElementQuad q = element_quadrature(tri.corners(e));
    const auto dofs = vs.element_dofs(tri, e);
    const double mass = 0.5 * (c.rho[e] + c.rho_prev[e]) / tau;
    const double mu = c.mu[e];
    const double half_rho = 0.5 * c.rho[e];
    double loc[12][12] = {};
    for (int k = 0; k < 7; ++k) {
      const auto& phi = q.phi[k];
      const auto& dphi = q.dphi[k];
      const double wq = q.w[k];
      Vec2 wv = Vec2::Zero();
      if (advect)
        for (int a = 0; a < 6; ++a) wv += phi[a] * w[dofs[a]];
      std::array<double, 6> wgrad{};
      for (int a = 0; a < 6; ++a) wgrad[a] = wv.dot(dphi[a]);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          double diag = 0;
          if (terms & kMass) diag += mass * phi[i] * phi[j];
          if (advect) diag += half_rho * (wgrad[j] * phi[i] - wgrad[i] * phi[j]);
          if (terms & kViscous) diag += mu * dphi[j].dot(dphi[i]);
          for (int s = 0; s < 2; ++s) {
            loc[2 * i + s][2 * j + s] += wq * diag;
            if (terms & kViscous)
              for (int r = 0; r < 2; ++r) loc[2 * i + s][2 * j + r] += wq * mu * dphi[j][s] * dphi[i][r];
          }
        }
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int s = 0; s < 2; ++s) {
        const int row = index(dofs[i], s);
        if (row < 0) continue;
        for (int j = 0; j < 6; ++j)
          for (int r = 0; r < 2; ++r) {
            const int col = index(dofs[j], r);
            if (col >= 0 && loc[2 * i + s][2 * j + r] != 0.0) trips.emplace_back(row, col, loc[2 * i + s][2 * j + r]);
          }
      }
  }
  if ((terms & kSlipFriction) && params.beta > 0) {
    for_slip_edges(tri, vs, [&](const std::array<int, 3>& d, int r, double len) {
      for (const auto& gp : quad::gauss3()) {
        const auto b = edge_basis(gp.s);
        for (int i = 0; i < 3; ++i) {
          const int row = index(d[i], r);
          if (row < 0) continue;
          for (int j = 0; j < 3; ++j) {
            const int col = index(d[j], r);
            if (col >= 0) trips.emplace_back(row, col, params.beta * gp.w * len * b[i] * b[j]);
          }
        }
      }
    });
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SpMat assemble_divergence(const Triangulation& tri, const VelocitySpace& vs, const PressureSpace& ps) {
  std::vector<Trip> trips;
  trips.reserve(tri.num_triangles() * 48);
  const auto& rule = quad::triangle7();
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const auto corners = tri.corners(e);
    const auto gl = p2::barycentric_gradients(corners);
    const double area = tri.area(e);
    const auto dofs = vs.element_dofs(tri, e);
    double loc[6][2][4] = {};
    std::array<int, 4> pd{};
    std::array<double, 4> pv{};
    int np = 0;
    for (const auto& qp : rule) {
      const std::array<double, 3> l{qp.l0, qp.l1, qp.l2};
      const auto dphi = p2::gradients(l, gl);
      np = ps.local(tri, e, l, pd, pv);
      for (int i = 0; i < 6; ++i)
        for (int r = 0; r < 2; ++r)
          for (int k = 0; k < np; ++k) loc[i][r][k] -= qp.w * area * dphi[i][r] * pv[k];
    }
    for (int i = 0; i < 6; ++i)
      for (int r = 0; r < 2; ++r) {
        const int row = vs.free_index[2 * dofs[i] + r];
        if (row < 0) continue;
        for (int k = 0; k < np; ++k) trips.emplace_back(row, pd[k], loc[i][r][k]);
      }
  }
  SpMat c(vs.num_free, static_cast<Eigen::Index>(ps.size()));
  c.setFromTriplets(trips.begin(), trips.end());
  return c;
}

SpMat assemble_coupling(const Triangulation& tri, const VelocitySpace& vs, const InterfaceCurve& curve,
                        const ElementClassification& cls, bool free_only) {
  const CurveNormals normals = compute_normals(curve);
  const std::size_t K = curve.size();
  std::vector<Trip> trips;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const std::size_t np = cls.piece_count(e);
    if (np == 0) continue;
    const auto corners = tri.corners(e);
    const auto dofs = vs.element_dofs(tri, e);
    const CutPiece* pieces = cls.pieces_of(e);
    for (std::size_t p = 0; p < np; ++p) {
      const CutPiece& piece = pieces[p];
      const int j = piece.segment;
      const int k0 = j, k1 = static_cast<int>((j + 1) % K);
      const Vec2& x0 = curve.vertex(k0);
      const Vec2 dx = curve.vertex(k1) - x0;
      const Vec2& nu = normals.segment[j];
      const double len = (piece.b - piece.a).norm();
      for (const Vec2& end : {piece.a, piece.b}) {
        const auto l = p2::barycentric(corners, end);
        if (std::min({l[0], l[1], l[2]}) < -1e-9) throw GeometryError("cut piece leaves its element");
      }
      double loc[6][2] = {};
      for (const auto& sp : quad::simpson()) {
        const Vec2 q = piece.a + sp.s * (piece.b - piece.a);
        const double s = std::clamp((q - x0).dot(dx) / dx.squaredNorm(), 0.0, 1.0);
        const auto phi = p2::values(p2::barycentric(corners, q));
        for (int i = 0; i < 6; ++i) {
          loc[i][0] += sp.w * len * phi[i] * (1 - s);
          loc[i][1] += sp.w * len * phi[i] * s;
        }
      }
      for (int i = 0; i < 6; ++i)
        for (int r = 0; r < 2; ++r) {
          const int row = free_only ? vs.free_index[2 * dofs[i] + r] : 2 * dofs[i] + r;
          if (row < 0) continue;
          trips.emplace_back(row, k0, loc[i][0] * nu[r]);
          trips.emplace_back(row, k1, loc[i][1] * nu[r]);
        }
    }
  }
  SpMat n(free_only ? vs.num_free : static_cast<Eigen::Index>(2 * vs.size()), static_cast<Eigen::Index>(K));
  n.setFromTriplets(trips.begin(), trips.end());
  return n;
}

Eigen::VectorXd assemble_xfem_column(const SpMat& coupling) {
  return -(coupling * Eigen::VectorXd::Ones(coupling.cols()));
}

AssembledSystem assemble_system(const AssemblyInput& in) {
  const Triangulation& tri = *in.tri;
  const VelocitySpace& vs = *in.vs;
  const PhysParams& params = *in.params;
  const DiscreteCoefficients& c = *in.coeffs;
  AssembledSystem sys;
  sys.tau = in.tau;
  sys.gamma = params.gamma;
  sys.pspace = *in.ps;
  sys.B = assemble_velocity_matrix(tri, vs, c, *in.u_prev, in.tau, params, kAllTerms, true);
  sys.C = assemble_divergence(tri, vs, *in.ps);
  if (in.curve) {
    sys.N = assemble_coupling(tri, vs, *in.curve, *in.cls, true);
    if (in.ps->xfem) sys.D = assemble_xfem_column(sys.N);
    sys.NG = lumped_normal_matrix(*in.curve);
    sys.AG = surface_stiffness(*in.curve);
    sys.X.resize(2 * in.curve->size());
    for (std::size_t k = 0; k < in.curve->size(); ++k) sys.X.segment<2>(2 * k) = in.curve->vertex(k);
  } else {
    sys.N.resize(vs.num_free, 0);
  }

  const std::vector<Vec2> f1 = interpolate_function(vs, [&](const Vec2& x) { return params.f1(x, in.t_next); });
  const std::vector<Vec2> f2 = interpolate_function(vs, [&](const Vec2& x) { return params.f2(x, in.t_next); });
  std::vector<Vec2> g(vs.size(), Vec2::Zero());
  std::vector<double> mdiag(vs.size(), 0.0);
  sys.pressure_weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in.ps->size()));
  const auto& rule = quad::triangle7();
  const std::vector<Vec2>& u = *in.u_prev;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const double area = tri.area(e);
    const auto dofs = vs.element_dofs(tri, e);
    const double rate = c.rho_prev[e] / in.tau;
    std::array<int, 4> pd{};
    std::array<double, 4> pv{};
    for (const auto& qp : rule) {
      const std::array<double, 3> l{qp.l0, qp.l1, qp.l2};
      const auto phi = p2::values(l);
      Vec2 val = Vec2::Zero();
      for (int a = 0; a < 6; ++a) val += phi[a] * (rate * u[dofs[a]] + c.rho[e] * f1[dofs[a]] + f2[dofs[a]]);
      const double wq = qp.w * area;
      for (int i = 0; i < 6; ++i) {
        g[dofs[i]] += wq * phi[i] * val;
        mdiag[dofs[i]] += wq * phi[i] * phi[i];
      }
      const int np = in.ps->local(tri, e, l, pd, pv);
      for (int k = 0; k < np; ++k) sys.pressure_weights[pd[k]] += wq * pv[k];
    }
  }
  sys.g = vs.restrict(g);
  sys.mass_diag.resize(vs.num_free);
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (int r = 0; r < 2; ++r)
      if (const int f = vs.free_index[2 * i + r]; f >= 0) sys.mass_diag[f] = mdiag[i];
  return sys;
}

double weighted_mass(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& xi,
                     const std::vector<Vec2>& u, const std::vector<Vec2>& v) {
  double sum = 0;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const auto dofs = vs.element_dofs(tri, e);
    const double area = tri.area(e);
    double loc = 0;
    for (const auto& qp : quad::triangle7()) {
      const auto phi = p2::values({qp.l0, qp.l1, qp.l2});
      Vec2 a = Vec2::Zero(), b = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        a += phi[k] * u[dofs[k]];
        b += phi[k] * v[dofs[k]];
      }
      loc += qp.w * a.dot(b);
    }
    sum += xi[e] * area * loc;
  }
  return sum;
}

double viscous_dissipation(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& mu,
                           const std::vector<Vec2>& u) {
  double sum = 0;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const auto corners = tri.corners(e);
    const auto gl = p2::barycentric_gradients(corners);
    const auto dofs = vs.element_dofs(tri, e);
    double loc = 0;
    for (const auto& qp : quad::triangle7()) {
      const auto dphi = p2::gradients({qp.l0, qp.l1, qp.l2}, gl);
      Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
      for (int k = 0; k < 6; ++k) G += u[dofs[k]] * dphi[k].transpose();
      const Eigen::Matrix2d D = 0.5 * (G + G.transpose());
      loc += qp.w * D.squaredNorm();
    }
    sum += mu[e] * tri.area(e) * loc;
  }
  return sum;
}

double forcing_work(const Triangulation& tri, const VelocitySpace& vs, const std::vector<double>& rho,
                    const PhysParams& params, double t, const std::vector<Vec2>& u) {
  const auto f1 = interpolate_function(vs, [&](const Vec2& x) { return params.f1(x, t); });
  const auto f2 = interpolate_function(vs, [&](const Vec2& x) { return params.f2(x, t); });
  double sum = 0;
  for (std::size_t e = 0; e < tri.num_triangles(); ++e) {
    const auto dofs = vs.element_dofs(tri, e);
    double loc = 0;
    for (const auto& qp : quad::triangle7()) {
      const auto phi = p2::values({qp.l0, qp.l1, qp.l2});
      Vec2 f = Vec2::Zero(), w = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        f += phi[k] * (rho[e] * f1[dofs[k]] + f2[dofs[k]]);
        w += phi[k] * u[dofs[k]];
      }
      loc += qp.w * f.dot(w);
    }
    sum += tri.area(e) * loc;
  }
  return sum;
}

double slip_boundary_norm(const Triangulation& tri, const VelocitySpace& vs, const std::vector<Vec2>& u) {
  double sum = 0;
  for_slip_edges(tri, vs, [&](const std::array<int, 3>& d, int r, double len) {
    for (const auto& gp : quad::gauss3()) {
      const auto b = edge_basis(gp.s);
      double v = 0;
      for (int i = 0; i < 3; ++i) v += b[i] * u[d[i]][r];
      sum += gp.w * len * v * v;
    }
  });
  return sum;
}

}  // namespace twophase
