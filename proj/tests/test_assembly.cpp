#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "twophase/assembly.hpp"
#include "twophase/quadrature.hpp"

using namespace twophase;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

struct Fixture {
  BulkMesh mesh = BulkMesh::uniform(Domain{}, 4);
  InterfaceCurve curve = InterfaceCurve::circle({0.5, 0.5}, 0.25, 48);
  ElementClassification cls;
  VelocitySpace vs;
  PhysParams params;
  DiscreteCoefficients coeffs;
  Fixture() {
    adapt_to_interface(mesh, curve, AdaptConfig{16, 4, true});
    cls = classify_elements(mesh.leaves(), curve);
    vs = build_velocity_space(mesh.leaves());
    coeffs = discrete_coefficients(cls, params, DensityStrategy::volume_fraction);
  }
  const Triangulation& tri() const { return mesh.leaves(); }
  std::vector<Vec2> random_field(std::mt19937& rng) const {
    std::normal_distribution<double> g;
    std::vector<Vec2> u(vs.size());
    for (Vec2& x : u) x = Vec2(g(rng), g(rng));
    return u;
  }
  Eigen::VectorXd flat(const std::vector<Vec2>& u) const {
    Eigen::VectorXd v(2 * u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v.segment<2>(2 * i) = u[i];
    return v;
  }
};

}  // namespace

TEST_CASE("quadrature rules") {
  double wsum = 0;
  for (const auto& p : quad::triangle7()) wsum += p.w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-15));
  // reference triangle (0,0),(1,0),(0,1): x = l1, y = l2
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 5; ++b) {
      double q = 0;
      for (const auto& p : quad::triangle7()) q += 0.5 * p.w * std::pow(p.l1, a) * std::pow(p.l2, b);
      CHECK(q == doctest::Approx(factorial(a) * factorial(b) / factorial(a + b + 2)).epsilon(1e-14));
    }
  for (int d = 0; d <= 3; ++d) {
    double q = 0;
    for (const auto& p : quad::simpson()) q += p.w * std::pow(p.s, d);
    CHECK(q == doctest::Approx(1.0 / (d + 1)).epsilon(1e-15));
  }
  for (int d = 0; d <= 9; ++d) {
    double q = 0;
    for (const auto& p : quad::gauss5()) q += p.w * std::pow(p.s, d);
    CHECK(q == doctest::Approx(1.0 / (d + 1)).epsilon(1e-14));
  }
  CHECK(quad::simpson()[0].w == doctest::Approx(1.0 / 6));
}

TEST_CASE("discrete coefficients") {
  ElementClassification cls;
  cls.labels = {Side::interface, Side::minus, Side::plus};
  cls.minus_fraction = {0.25, 1, 0};
  const PhysParams p;
  const auto mid = discrete_coefficients(cls, p, DensityStrategy::midpoint);
  CHECK(mid.rho[0] == 550);
  CHECK(mid.mu[0] == 5.5);
  CHECK(mid.rho[1] == 100);
  CHECK(mid.mu[1] == 1);
  CHECK(mid.rho[2] == 1000);
  CHECK(mid.rho_prev == mid.rho);
  CHECK_THROWS_AS(discrete_coefficients(cls, p, DensityStrategy::volume_fraction), ConfigError);
  cls.has_fractions = true;
  const auto vf = discrete_coefficients(cls, p, DensityStrategy::volume_fraction);
  CHECK(vf.rho[0] == doctest::Approx(775));
  CHECK(vf.mu[0] == doctest::Approx(7.75));
  CHECK(vf.rho[1] == 100);
  const std::vector<double> prev{1, 2, 3};
  CHECK(discrete_coefficients(cls, p, DensityStrategy::midpoint, &prev).rho_prev == prev);
}

TEST_CASE("advection block is antisymmetric") {
  Fixture f;
  std::mt19937 rng(1);
  const auto w = f.random_field(rng);
  const SpMat A = assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, w, 1e-3, f.params, kAdvection, false);
  const SpMat S = A + SpMat(A.transpose());
  double amax = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  double smax = 0;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it) smax = std::max(smax, std::abs(it.value()));
  CHECK(amax > 0);
  CHECK(smax <= 1e-14 * amax);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = f.flat(f.random_field(rng));
    CHECK(std::abs(x.dot(A * x)) <= 1e-12 * x.squaredNorm() * amax);
  }
  const std::vector<Vec2> zero(f.vs.size(), Vec2::Zero());
  CHECK(assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, zero, 1e-3, f.params, kAdvection, false).norm() == 0);
}

TEST_CASE("viscous block vanishes on rigid motions") {
  Fixture f;
  const std::vector<Vec2> w(f.vs.size(), Vec2::Zero());
  const SpMat V = assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, w, 1e-3, f.params, kViscous, false);
  const auto translation = interpolate_function(f.vs, [](const Vec2&) { return Vec2(0.3, -1.2); });
  const auto rotation = interpolate_function(f.vs, [](const Vec2& p) { return Vec2(-p.y(), p.x()); });
  const auto shear = interpolate_function(f.vs, [](const Vec2& p) { return Vec2(p.y(), 0.0); });
  const Eigen::VectorXd t = f.flat(translation), r = f.flat(rotation), s = f.flat(shear);
  CHECK((V * t).norm() < 1e-10);
  CHECK((V * r).norm() < 1e-10);
  CHECK(s.dot(V * s) > 0);
  // 2 (mu D(u), D(u)) for u = (y, 0): |D|^2 = 1/2
  double expect = 0;
  for (std::size_t e = 0; e < f.tri().num_triangles(); ++e) expect += f.coeffs.mu[e] * f.tri().area(e);
  CHECK(s.dot(V * s) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(viscous_dissipation(f.tri(), f.vs, f.coeffs.mu, shear) == doctest::Approx(0.5 * expect).epsilon(1e-12));
}

TEST_CASE("mass block integrates the density") {
  Fixture f;
  const std::vector<Vec2> w(f.vs.size(), Vec2::Zero());
  const double tau = 0.01;
  const SpMat M = assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, w, tau, f.params, kMass, false);
  Eigen::VectorXd ex = Eigen::VectorXd::Zero(M.rows());
  for (Eigen::Index i = 0; i < ex.size(); i += 2) ex[i] = 1;
  double expect = 0;
  for (std::size_t e = 0; e < f.tri().num_triangles(); ++e) expect += f.coeffs.rho[e] * f.tri().area(e);
  CHECK(ex.dot(M * ex) == doctest::Approx(expect / tau).epsilon(1e-12));
  const auto one = interpolate_function(f.vs, [](const Vec2&) { return Vec2(1, 0); });
  CHECK(weighted_mass(f.tri(), f.vs, f.coeffs.rho, one, one) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, w, 0.0, f.params, kMass, false), ConfigError);
}

TEST_CASE("symmetric part of the velocity matrix is positive definite") {
  Fixture f;
  std::mt19937 rng(9);
  const auto w = f.random_field(rng);
  const SpMat B = assemble_velocity_matrix(f.tri(), f.vs, f.coeffs, w, 1e-3, f.params, kAllTerms, true);
  CHECK(B.rows() == f.vs.num_free);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(B.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = g(rng);
    CHECK(x.dot(B * x) > 0);
  }
}

TEST_CASE("divergence block") {
  Fixture f;
  for (PressureElement el : {PressureElement::p1, PressureElement::p0, PressureElement::p1p0}) {
    const PressureSpace ps = build_pressure_space(f.tri(), el, false);
    const SpMat C = assemble_divergence(f.tri(), f.vs, ps);
    CHECK(C.rows() == f.vs.num_free);
    CHECK(static_cast<std::size_t>(C.cols()) == ps.size());
    if (ps.has_p1()) {
      Eigen::VectorXd one = Eigen::VectorXd::Zero(C.cols());
      one.head(f.tri().num_points()).setOnes();
      CHECK((C * one).norm() < 1e-12);
    }
    if (ps.has_p0()) {
      Eigen::VectorXd one = Eigen::VectorXd::Zero(C.cols());
      one.segment(ps.p0_offset(), f.tri().num_triangles()).setOnes();
      CHECK((C * one).norm() < 1e-12);
    }
  }
  // u = (0, y(2-y)), div u = 2 - 2y; edge-midpoint rule is exact for the quadratic integrand
  const PressureSpace ps = build_pressure_space(f.tri(), PressureElement::p1, false);
  const SpMat C = assemble_divergence(f.tri(), f.vs, ps);
  const auto u = interpolate_function(f.vs, [](const Vec2& p) { return Vec2(0, p.y() * (2 - p.y())); });
  const Eigen::VectorXd got = -(C.transpose() * f.vs.restrict(u));
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(ps.size());
  for (std::size_t e = 0; e < f.tri().num_triangles(); ++e) {
    const auto c = f.tri().corners(e);
    const auto& v = f.tri().triangles[e];
    for (int k = 0; k < 3; ++k) {
      const Vec2 m = 0.5 * (c[k] + c[(k + 1) % 3]);
      const double div = 2 - 2 * m.y();
      expect[v[k]] += f.tri().area(e) / 3 * div * 0.5;
      expect[v[(k + 1) % 3]] += f.tri().area(e) / 3 * div * 0.5;
    }
  }
  CHECK((got - expect).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("coupling matrix") {
  Fixture f;
  const SpMat N = assemble_coupling(f.tri(), f.vs, f.curve, f.cls, false);
  CHECK(N.rows() == static_cast<Eigen::Index>(2 * f.vs.size()));
  CHECK(N.cols() == static_cast<Eigen::Index>(f.curve.size()));
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(N.rows());
    for (Eigen::Index i = r; i < e.size(); i += 2) e[i] = 1;
    CHECK(std::abs((N.transpose() * e).sum()) < 1e-12);
  }
  // row sums against the lumped interface normals: sum_i <phi_i, chi_l nu> = <1, chi_l nu> = N_Gamma block
  const LumpedNormalMatrix NG = lumped_normal_matrix(f.curve);
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(N.rows());
    for (Eigen::Index i = r; i < e.size(); i += 2) e[i] = 1;
    const Eigen::VectorXd col = N.transpose() * e;
    for (std::size_t l = 0; l < f.curve.size(); ++l) CHECK(col[l] == doctest::Approx(NG.blocks[l][r]).epsilon(1e-12));
  }

  const SpMat Nf = assemble_coupling(f.tri(), f.vs, f.curve, f.cls, true);
  const Eigen::VectorXd D = assemble_xfem_column(Nf);
  CHECK((D + Nf * Eigen::VectorXd::Ones(Nf.cols())).norm() == 0);
}

TEST_CASE("coupling against Gauss quadrature") {
  const BulkMesh m = BulkMesh::uniform(Domain{{0, 0}, {1, 1}}, 1);
  const Triangulation& t = m.leaves();
  const auto corners0 = t.corners(0);
  const Vec2 g = (corners0[0] + corners0[1] + corners0[2]) / 3;
  const InterfaceCurve c = InterfaceCurve::circle(g, 0.05, 5);
  const ElementClassification cls = classify_elements(t, c);
  REQUIRE(cls.interface_count() == 1);
  const VelocitySpace vs = build_velocity_space(t);
  const Eigen::MatrixXd N(assemble_coupling(t, vs, c, cls, false));
  const CurveNormals nn = compute_normals(c);
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(N.rows(), N.cols());
  const auto dofs = vs.element_dofs(t, 0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const Vec2 a = c.vertex(j), b = c.vertex(c.next(j));
    for (const auto& q : quad::gauss5()) {
      const auto phi = p2::values(p2::barycentric(corners0, a + q.s * (b - a)));
      for (int i = 0; i < 6; ++i)
        for (int r = 0; r < 2; ++r) {
          oracle(2 * dofs[i] + r, j) += q.w * nn.lengths[j] * phi[i] * (1 - q.s) * nn.segment[j][r];
          oracle(2 * dofs[i] + r, c.next(j)) += q.w * nn.lengths[j] * phi[i] * q.s * nn.segment[j][r];
        }
    }
  }
  CHECK((N - oracle).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("enrichment column matches the divergence theorem") {
  Fixture f;
  const SpMat N = assemble_coupling(f.tri(), f.vs, f.curve, f.cls, true);
  const Eigen::VectorXd D = assemble_xfem_column(N);
  const std::vector<Vec2>& x = f.curve.vertices();
  double area = 0, mx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec2& a = x[i];
    const Vec2& b = x[(i + 1) % x.size()];
    const double cr = cross2(a, b);
    area += 0.5 * cr;
    mx += (a.x() + b.x()) * cr / 6;
  }
  const auto lin = interpolate_function(f.vs, [](const Vec2& p) { return Vec2(p.x(), 0); });
  CHECK(-D.dot(f.vs.restrict(lin)) == doctest::Approx(area).epsilon(1e-12));
  // div (x^2, xy) = 3x
  const auto quad = interpolate_function(f.vs, [](const Vec2& p) { return Vec2(p.x() * p.x(), p.x() * p.y()); });
  CHECK(-D.dot(f.vs.restrict(quad)) == doctest::Approx(3 * mx).epsilon(1e-10));
}

TEST_CASE("assembled system") {
  Fixture f;
  std::mt19937 rng(12);
  auto u = f.random_field(rng);
  f.vs.apply_constraints(u);
  const PressureSpace ps = build_pressure_space(f.tri(), PressureElement::p1p0, true);
  AssemblyInput in;
  in.tri = &f.tri();
  in.vs = &f.vs;
  in.ps = &ps;
  in.cls = &f.cls;
  in.curve = &f.curve;
  in.coeffs = &f.coeffs;
  in.u_prev = &u;
  in.tau = 1e-3;
  in.t_next = 1e-3;
  in.params = &f.params;
  const AssembledSystem s = assemble_system(in);
  CHECK(s.xfem());
  CHECK(s.B.rows() == f.vs.num_free);
  CHECK(s.pressure_columns() == ps.columns());
  CHECK(s.N.cols() == static_cast<Eigen::Index>(f.curve.size()));
  CHECK(s.AG.rows() == static_cast<Eigen::Index>(2 * f.curve.size()));
  CHECK(s.g.size() == f.vs.num_free);
  CHECK(s.pressure_weights.sum() == doctest::Approx(2.0 * (ps.has_p0() ? 2 : 1)).epsilon(1e-12));

  // g = (rho_prev/tau u + rho f1, phi): contraction with u against the energy helpers
  const Eigen::VectorXd ur = f.vs.restrict(u);
  const double expect = weighted_mass(f.tri(), f.vs, f.coeffs.rho_prev, u, u) / in.tau +
                        forcing_work(f.tri(), f.vs, f.coeffs.rho, f.params, in.t_next, u);
  CHECK(s.g.dot(ur) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cut piece outside its element is rejected") {
  Fixture f;
  ElementClassification bad = f.cls;
  for (std::size_t e = 0; e < f.tri().num_triangles(); ++e)
    if (bad.piece_count(e) > 0) {
      bad.pieces[bad.offsets[e]].a += Vec2(0.5, 0.5);
      break;
    }
  CHECK_THROWS_AS(assemble_coupling(f.tri(), f.vs, f.curve, bad, true), GeometryError);
}
