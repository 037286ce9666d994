#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "twophase/saddle_solver.hpp"

using namespace twophase;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Problem {
  BulkMesh mesh;
  InterfaceCurve curve;
  ElementClassification cls;
  VelocitySpace vs;
  PressureSpace ps;
  PhysParams params;
  DiscreteCoefficients coeffs;
  std::vector<Vec2> u_prev;
  AssembledSystem sys;

  Problem(int n_coarse, int n_fine, PressureElement el, bool xfem, const PhysParams& p = PhysParams(),
          double tau = 1e-3, unsigned seed = 0, int K = 24)
      : mesh(BulkMesh::uniform(Domain{}, n_coarse)),
        curve(InterfaceCurve::circle({0.5, 0.5}, 0.25, K)),
        params(p) {
    adapt_to_interface(mesh, curve, AdaptConfig{n_fine, n_coarse, true});
    cls = classify_elements(mesh.leaves(), curve);
    vs = build_velocity_space(mesh.leaves());
    ps = build_pressure_space(mesh.leaves(), el, xfem);
    coeffs = discrete_coefficients(cls, params, DensityStrategy::midpoint);
    u_prev.assign(vs.size(), Vec2::Zero());
    if (seed) {
      std::mt19937 rng(seed);
      std::normal_distribution<double> g(0, 0.1);
      for (Vec2& x : u_prev) x = Vec2(g(rng), g(rng));
      vs.apply_constraints(u_prev);
    }
    AssemblyInput in;
    in.tri = &mesh.leaves();
    in.vs = &vs;
    in.ps = &ps;
    in.cls = &cls;
    in.curve = &curve;
    in.coeffs = &coeffs;
    in.u_prev = &u_prev;
    in.tau = tau;
    in.t_next = tau;
    in.params = &params;
    sys = assemble_system(in);
  }
  InterfaceBlock block() const { return factor_interface_block(sys.NG, sys.AG, sys.tau); }
};

MatrixXd dense(const SpMat& m) { return MatrixXd(m); }

MatrixXd pressure_block(const AssembledSystem& s) {
  MatrixXd c(s.C.rows(), s.pressure_columns());
  c.leftCols(s.C.cols()) = dense(s.C);
  if (s.xfem()) c.col(s.C.cols()) = s.D;
  return c;
}

}  // namespace

TEST_CASE("interface block solves") {
  const InterfaceCurve c = InterfaceCurve::circle({0.5, 0.5}, 0.25, 32);
  const InterfaceBlock b = factor_interface_block(lumped_normal_matrix(c), surface_stiffness(c), 1e-3);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 5; ++t) {
    VectorXd rhs(96);
    for (auto& x : rhs) x = g(rng);
    const VectorXd z = b.solve(rhs);
    CHECK((b.matrix() * z - rhs).norm() / rhs.norm() < 1e-12);
  }
  CHECK(b.solve(VectorXd::Zero(96)).norm() == 0);
}

TEST_CASE("parallel vertex normals violate the assumption") {
  const InterfaceCurve c = InterfaceCurve::circle({0, 0}, 1, 8);
  LumpedNormalMatrix ng = lumped_normal_matrix(c);
  for (Vec2& b : ng.blocks) b = Vec2(0, 0.3);
  CHECK_THROWS_AS(factor_interface_block(ng, surface_stiffness(c), 1e-3), AssumptionAViolation);
  CHECK_THROWS_AS(factor_interface_block(lumped_normal_matrix(c), surface_stiffness(c), 0.0), ConfigError);
}

TEST_CASE("reduced operator") {
  Problem pr(2, 8, PressureElement::p1, false, PhysParams(), 1e-3, 5, 12);
  const InterfaceBlock block = pr.block();
  const Eigen::Index n = pr.sys.B.rows();
  REQUIRE(n < 600);

  // dense oracle B + gamma N [Xi^-1]_{kappa,kappa-rhs} N^T
  const Eigen::Index K = static_cast<Eigen::Index>(pr.curve.size());
  const MatrixXd xi_inv = dense(block.matrix()).inverse();
  const MatrixXd N = dense(pr.sys.N);
  const MatrixXd F = dense(pr.sys.B) + pr.sys.gamma * N * xi_inv.topLeftCorner(K, K) * N.transpose();
  double err = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd e = VectorXd::Unit(n, i);
    err = std::max(err, (schur_apply(pr.sys, &block, e) - F.col(i)).cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-10 * F.cwiseAbs().maxCoeff());

  std::mt19937 rng(8);
  std::normal_distribution<double> g;
  VectorXd u(n);
  for (auto& x : u) x = g(rng);
  AssembledSystem no_tension = pr.sys;
  no_tension.gamma = 0;
  CHECK((schur_apply(no_tension, &block, u) - pr.sys.B * u).norm() == 0);
  CHECK((schur_apply(pr.sys, nullptr, u) - pr.sys.B * u).norm() == 0);

  for (int t = 0; t < 20; ++t) {
    for (auto& x : u) x = g(rng);
    const double q = u.dot(schur_apply(pr.sys, &block, u) - pr.sys.B * u);
    CHECK(q >= -1e-12 * u.squaredNorm());
  }
}

TEST_CASE("reduced solve matches a monolithic dense solve") {
  for (bool xfem : {false, true}) {
    Problem pr(2, 8, xfem ? PressureElement::p1p0 : PressureElement::p1, xfem, PhysParams(), 1e-3, 7, 12);
    const AssembledSystem& s = pr.sys;
    const InterfaceBlock block = pr.block();
    const Eigen::Index nu = s.B.rows(), np = static_cast<Eigen::Index>(s.pressure_columns());
    const Eigen::Index K = static_cast<Eigen::Index>(pr.curve.size());
    const Eigen::Index n = nu + np + 3 * K;
    REQUIRE(n <= 700);
    MatrixXd M = MatrixXd::Zero(n, n);
    VectorXd rhs = VectorXd::Zero(n);
    const MatrixXd C = pressure_block(s);
    const MatrixXd N = dense(s.N);
    const MatrixXd NGt = dense(s.NG.transpose_matrix());
    M.topLeftCorner(nu, nu) = dense(s.B);
    M.block(0, nu, nu, np) = C;
    M.block(0, nu + np, nu, K) = -s.gamma * N;
    M.block(nu, 0, np, nu) = C.transpose();
    M.block(nu + np, 0, K, nu) = N.transpose();
    M.block(nu + np, nu + np + K, K, 2 * K) = -NGt / s.tau;
    M.block(nu + np + K, nu + np, 2 * K, K) = NGt.transpose();
    M.block(nu + np + K, nu + np + K, 2 * K, 2 * K) = dense(s.AG);
    rhs.head(nu) = s.g;
    rhs.tail(2 * K) = -(s.AG * s.X);
    const VectorXd z = M.completeOrthogonalDecomposition().solve(rhs);

    SolverConfig tight;
    tight.tol = 1e-14;
    const SolveResult res = solve_coupled(s, &block, tight);
    const InterfaceUpdate up = recover_interface(block, s, res.u);
    CHECK(res.residual <= 1e-10);
    CHECK((res.u - z.head(nu)).norm() <= 1e-8 * z.head(nu).norm());
    CHECK((up.kappa - z.segment(nu + np, K)).norm() <= 1e-8 * z.segment(nu + np, K).norm());
    VectorXd dx(2 * K);
    for (Eigen::Index k = 0; k < K; ++k) dx.segment<2>(2 * k) = up.dX[k];
    CHECK((dx - z.tail(2 * K)).norm() <= 1e-8 * z.tail(2 * K).norm());

    VectorXd full(n);
    full.head(nu) = res.u;
    full.segment(nu, s.C.cols()) = res.p;
    if (xfem) full[nu + np - 1] = res.lambda;
    full.segment(nu + np, K) = up.kappa;
    full.tail(2 * K) = dx;
    CHECK((M * full - rhs).norm() <= 1e-9 * rhs.norm());

    if (xfem) {
      const double bound = 10 * SolverConfig{}.tol * s.g.norm();
      CHECK(std::abs(s.D.dot(res.u)) <= bound);
      CHECK(std::abs(normal_displacement(s.NG, up.dX)) <= bound * s.tau);
    }
  }
}

TEST_CASE("hydrostatic balance") {
  PhysParams p;
  p.rho_minus = p.rho_plus = 1000;
  p.mu_minus = p.mu_plus = 10;
  p.gamma = 0;
  for (auto [el, xfem] : {std::pair{PressureElement::p1, false}, std::pair{PressureElement::p1p0, true}}) {
    Problem pr(4, 16, el, xfem, p);
    SolverConfig tight;
    tight.tol = 1e-15;
    const SolveResult res = solve_coupled(pr.sys, nullptr, tight);
    CHECK(res.u.lpNorm<Eigen::Infinity>() <= 1e-10);
    const auto& pts = pr.mesh.leaves().points;
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double exact = -980 * (pts[i].y() - 1);
      err = std::max(err, std::abs(res.p[i] - exact));
      scale = std::max(scale, std::abs(exact));
    }
    if (pr.ps.has_p0())
      for (std::size_t e = 0; e < pr.mesh.num_elements(); ++e) err = std::max(err, std::abs(res.p[pr.ps.p0_offset() + e]));
    CHECK(err <= 1e-9 * scale);
    CHECK(std::abs(res.lambda) <= 1e-9 * scale);
  }
}

TEST_CASE("zero data gives the zero solution") {
  PhysParams p;
  p.f1 = [](const Vec2&, double) { return Vec2(0, 0); };
  p.gamma = 0;
  Problem pr(2, 8, PressureElement::p1, true, p);
  const SolveResult res = solve_coupled(pr.sys, nullptr, SolverConfig{});
  CHECK(res.u.norm() == 0);
  CHECK(res.p.norm() == 0);
  CHECK(res.lambda == 0);
}

TEST_CASE("interface recovery") {
  Problem pr(2, 8, PressureElement::p1, false, PhysParams(), 1e-3, 0, 32);
  const InterfaceBlock block = pr.block();
  const VectorXd zero = VectorXd::Zero(pr.sys.B.rows());
  const InterfaceUpdate up = recover_interface(block, pr.sys, zero);
  double rmin = 1e300, rmax = 0;
  for (std::size_t k = 0; k < pr.curve.size(); ++k) {
    const Vec2 radial = (pr.curve.vertex(k) - Vec2(0.5, 0.5)).normalized();
    CHECK(std::abs(cross2(radial, up.dX[k])) < 1e-10);
    rmin = std::min(rmin, up.dX[k].norm());
    rmax = std::max(rmax, up.dX[k].norm());
  }
  CHECK(rmax - rmin < 1e-10);

  // without the curvature source the displacement is linear in tau
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  VectorXd u(pr.sys.B.rows());
  for (auto& x : u) x = g(rng);
  AssembledSystem flat = pr.sys;
  flat.X.setZero();
  const InterfaceUpdate a = recover_interface(block, flat, u);
  const InterfaceBlock block2 = factor_interface_block(pr.sys.NG, pr.sys.AG, 2 * pr.sys.tau);
  const InterfaceUpdate b = recover_interface(block2, flat, u);
  double na = 0, nb = 0;
  for (std::size_t k = 0; k < a.dX.size(); ++k) {
    na += a.dX[k].squaredNorm();
    nb += b.dX[k].squaredNorm();
  }
  CHECK(std::sqrt(nb) == doctest::Approx(2 * std::sqrt(na)).epsilon(1e-10));
}

TEST_CASE("solver is deterministic and reports failure") {
  Problem pr(2, 8, PressureElement::p1p0, true, PhysParams(), 1e-3, 4, 16);
  const InterfaceBlock block = pr.block();
  const SolveResult a = solve_coupled(pr.sys, &block, SolverConfig{});
  const SolveResult b = solve_coupled(pr.sys, &block, SolverConfig{});
  CHECK(a.u == b.u);
  CHECK(a.p == b.p);
  CHECK(a.iterations == b.iterations);

  SolverConfig tight;
  tight.tol = 1e-14;
  SolverConfig gm = tight;
  gm.method = SolverConfig::Method::gmres;
  const SolveResult c = solve_coupled(pr.sys, &block, gm);
  const SolveResult d = solve_coupled(pr.sys, &block, tight);
  CHECK((c.u - d.u).norm() <= 1e-8 * d.u.norm());

  SolverConfig hard;
  hard.tol = 1e-15;
  hard.max_iter = 1;
  hard.velocity_preconditioner = SolverConfig::VelocityPreconditioner::ssor;
  CHECK_THROWS_AS(solve_coupled(pr.sys, &block, hard), SolverFailure);
  try {
    solve_coupled(pr.sys, &block, hard);
  } catch (const SolverFailure& f) {
    CHECK_FALSE(f.history().empty());
  }
  SolverConfig bad;
  bad.tol = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pressure normalization") {
  Problem pr(2, 8, PressureElement::p1p0, false);
  VectorXd p = VectorXd::LinSpaced(pr.ps.size(), 1, 3);
  normalize_pressure(pr.ps, pr.sys.pressure_weights, p);
  const auto nv = static_cast<Eigen::Index>(pr.ps.num_vertices);
  const auto ne = static_cast<Eigen::Index>(pr.ps.num_elements);
  CHECK(std::abs(p.head(nv).dot(pr.sys.pressure_weights.head(nv))) < 1e-12);
  CHECK(std::abs(p.tail(ne).dot(pr.sys.pressure_weights.tail(ne))) < 1e-12);
}
