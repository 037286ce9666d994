#include "twophase/saddle_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace twophase {

using Eigen::VectorXd;

void SolverConfig::validate() const {
  if (!(tol > 0 && tol < 1)) throw ConfigError("outer tolerance must lie in (0,1)");
  if (!(inner_tol > 0 && inner_tol < 1)) throw ConfigError("inner tolerance must lie in (0,1)");
  if (max_iter < 1 || inner_max_iter < 1 || restart < 1) throw ConfigError("iteration limits must be positive");
}

InterfaceBlock::InterfaceBlock(const LumpedNormalMatrix& ng, const SpMat& ag, double tau) : K_(ng.blocks.size()) {
  if (!(tau > 0)) throw ConfigError("time step must be positive");
  const Eigen::Index K = static_cast<Eigen::Index>(K_);
  Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
  for (const Vec2& b : ng.blocks) gram += b * b.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(gram);
  const double lmin = eig.eigenvalues()[0], lmax = eig.eigenvalues()[1];
  if (!(lmax > 0) || lmin < 1e-12 * lmax) {
    std::ostringstream os;
    os << "vertex normals do not span the plane (rank " << (lmax > 0 ? 1 : 0) << ", eigenvalues " << lmin << ", "
       << lmax << ")";
    throw AssumptionAViolation(os.str());
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * K + ag.nonZeros());
  for (Eigen::Index k = 0; k < K; ++k) {
    for (int r = 0; r < 2; ++r) {
      t.emplace_back(k, K + 2 * k + r, -ng.blocks[k][r] / tau);
      t.emplace_back(K + 2 * k + r, k, ng.blocks[k][r]);
    }
  }
  for (Eigen::Index c = 0; c < ag.outerSize(); ++c)
    for (SpMat::InnerIterator it(ag, c); it; ++it) t.emplace_back(K + it.row(), K + it.col(), it.value());
  xi_.resize(3 * K, 3 * K);
  xi_.setFromTriplets(t.begin(), t.end());
  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->analyzePattern(xi_);
  lu_->factorize(xi_);
  if (lu_->info() != Eigen::Success)
    throw AssumptionAViolation("interface block factorization failed: " + lu_->lastErrorMessage());
}

VectorXd InterfaceBlock::solve(const VectorXd& b) const {
  if (b.size() != xi_.rows()) throw Error("interface block right-hand side has wrong size");
  if (b.isZero(0.0)) return VectorXd::Zero(b.size());
  return lu_->solve(b);
}

InterfaceBlock factor_interface_block(const LumpedNormalMatrix& ng, const SpMat& ag, double tau) {
  return InterfaceBlock(ng, ag, tau);
}

VectorXd schur_apply(const AssembledSystem& sys, const InterfaceBlock* block, const VectorXd& u) {
  VectorXd r = sys.B * u;
  if (block && sys.gamma != 0 && sys.N.cols() > 0) {
    const Eigen::Index K = sys.N.cols();
    VectorXd b = VectorXd::Zero(3 * K);
    b.head(K) = sys.N.transpose() * u;
    const VectorXd z = block->solve(b);
    r += sys.gamma * (sys.N * z.head(K));
  }
  return r;
}

VectorXd reduced_rhs(const AssembledSystem& sys, const InterfaceBlock* block) {
  VectorXd r = sys.g;
  if (block && sys.gamma != 0 && sys.N.cols() > 0) {
    const Eigen::Index K = sys.N.cols();
    VectorXd b = VectorXd::Zero(3 * K);
    b.tail(2 * K) = sys.AG * sys.X;
    const VectorXd z = block->solve(b);
    r -= sys.gamma * (sys.N * z.head(K));
  }
  return r;
}

void normalize_pressure(const PressureSpace& ps, const VectorXd& w, VectorXd& p) {
  auto shift = [&](std::size_t off, std::size_t n) {
    double s = 0, m = 0;
    for (std::size_t i = off; i < off + n; ++i) {
      s += w[i];
      m += w[i] * p[i];
    }
    if (s > 0)
      for (std::size_t i = off; i < off + n; ++i) p[i] -= m / s;
  };
  if (ps.has_p1()) shift(0, ps.num_vertices);
  if (ps.has_p0()) shift(ps.p0_offset(), ps.num_elements);
}

double normal_displacement(const LumpedNormalMatrix& ng, const std::vector<Vec2>& dX) {
  double s = 0;
  for (std::size_t k = 0; k < dX.size(); ++k) s += ng.blocks[k].dot(dX[k]);
  return s;
}

namespace {

/// Velocity-pressure operator and the BFBt-type block preconditioner.
class SaddleSystem {
 public:
  SaddleSystem(const AssembledSystem& sys, const InterfaceBlock* block, const SolverConfig& cfg)
      : sys_(sys), block_(block), cfg_(cfg), nu_(sys.B.rows()), np_(static_cast<Eigen::Index>(sys.pressure_columns())) {
    minv_ = sys.mass_diag.cwiseInverse();
    // Jacobi scaling of C^T M^{-1} C.
    ldiag_ = VectorXd::Zero(np_);
    for (Eigen::Index c = 0; c < sys.C.outerSize(); ++c)
      for (SpMat::InnerIterator it(sys.C, c); it; ++it) ldiag_[it.col()] += it.value() * it.value() * minv_[it.row()];
    if (sys.xfem()) ldiag_[np_ - 1] = sys.D.cwiseAbs2().dot(minv_);
    for (Eigen::Index i = 0; i < np_; ++i)
      if (!(ldiag_[i] > 0)) ldiag_[i] = 1;
    const PressureSpace& ps = sys.pspace;
    auto mode = [&](std::size_t off, std::size_t n) {
      VectorXd k = VectorXd::Zero(np_);
      k.segment(off, n).setOnes();
      kernel_.push_back(k.normalized());
    };
    if (cfg.project) {
      if (ps.has_p1()) mode(0, ps.num_vertices);
      if (ps.has_p0()) mode(ps.p0_offset(), ps.num_elements);
    }
    if (cfg.velocity_preconditioner == SolverConfig::VelocityPreconditioner::direct) {
      lu_.analyzePattern(sys.B);
      lu_.factorize(sys.B);
      if (lu_.info() != Eigen::Success) throw SolverFailure("velocity block factorization failed", {});
    }
  }

  Eigen::Index size() const { return nu_ + np_; }
  Eigen::Index nu() const { return nu_; }

  VectorXd grad(const VectorXd& p) const {
    VectorXd r = sys_.C * p.head(sys_.C.cols());
    if (sys_.xfem()) r += sys_.D * p[np_ - 1];
    return r;
  }
  VectorXd div(const VectorXd& u) const {
    VectorXd r(np_);
    r.head(sys_.C.cols()) = sys_.C.transpose() * u;
    if (sys_.xfem()) r[np_ - 1] = sys_.D.dot(u);
    return r;
  }

  VectorXd apply(const VectorXd& x) const {
    VectorXd y(size());
    y.head(nu_) = schur_apply(sys_, block_, x.head(nu_)) + grad(x.tail(np_));
    y.tail(np_) = div(x.head(nu_));
    return y;
  }

  VectorXd solve_velocity(const VectorXd& v) const {
    if (cfg_.velocity_preconditioner == SolverConfig::VelocityPreconditioner::direct) return lu_.solve(v);
    VectorXd x = VectorXd::Zero(nu_);
    const SpMat& B = sys_.B;
    VectorXd diag = B.diagonal();
    const SpMat Bt = B.transpose();  // row access
    for (int s = 0; s < cfg_.ssor_sweeps; ++s) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index ii = 0; ii < nu_; ++ii) {
          const Eigen::Index i = pass == 0 ? ii : nu_ - 1 - ii;
          double acc = v[i];
          for (SpMat::InnerIterator it(Bt, i); it; ++it)
            if (it.row() != i) acc -= it.value() * x[it.row()];
          x[i] = acc / diag[i];
        }
      }
    }
    return x;
  }

  void project(VectorXd& p) const {
    for (const VectorXd& k : kernel_) p -= k.dot(p) * k;
  }

  /// (C^T M^{-1} C)^+ b on the complement of the constant modes.
  VectorXd inner_solve(VectorXd b) const {
    project(b);
    VectorXd x = VectorXd::Zero(np_);
    const double bn = b.norm();
    if (bn == 0) return x;
    VectorXd r = b;
    VectorXd z = r.cwiseQuotient(ldiag_);
    project(z);
    VectorXd d = z;
    double rz = r.dot(z);
    for (int it = 0; it < cfg_.inner_max_iter; ++it) {
      VectorXd q = div(minv_.cwiseProduct(grad(d)));
      project(q);
      const double dq = d.dot(q);
      if (!(dq > 0)) break;
      const double a = rz / dq;
      x += a * d;
      r -= a * q;
      if (r.norm() <= cfg_.inner_tol * bn) break;
      z = r.cwiseQuotient(ldiag_);
      project(z);
      const double rz_new = r.dot(z);
      d = z + (rz_new / rz) * d;
      rz = rz_new;
    }
    project(x);
    return x;
  }

  VectorXd precondition(const VectorXd& x) const {
    const VectorXd v = x.head(nu_);
    const VectorXd q = x.tail(np_);
    VectorXd y = inner_solve(q);
    y = div(minv_.cwiseProduct(schur_apply(sys_, block_, minv_.cwiseProduct(grad(y)))));
    const VectorXd p = -inner_solve(y);
    VectorXd out(size());
    out.head(nu_) = solve_velocity(v - grad(p));
    out.tail(np_) = p;
    return out;
  }

 private:
  const AssembledSystem& sys_;
  const InterfaceBlock* block_;
  const SolverConfig& cfg_;
  Eigen::Index nu_, np_;
  VectorXd minv_, ldiag_;
  std::vector<VectorXd> kernel_;
  Eigen::SparseLU<SpMat> lu_;
};

enum class KrylovStatus { converged, breakdown, exhausted };

KrylovStatus bicgstab(const SaddleSystem& A, const VectorXd& b, VectorXd& x, double tol, int max_iter,
                      std::vector<double>& history, int& iters) {
  const double bn = b.norm();
  VectorXd r = b - A.apply(x);
  for (int restart = 0; restart < 3; ++restart) {
    const VectorXd rhat = r;
    double rho = 1, alpha = 1, omega = 1;
    VectorXd v = VectorXd::Zero(b.size()), p = VectorXd::Zero(b.size());
    bool broke = false;
    while (iters < max_iter) {
      const double rho_new = rhat.dot(r);
      if (std::abs(rho_new) < 1e-300 || omega == 0) {
        broke = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      p = r + beta * (p - omega * v);
      const VectorXd y = A.precondition(p);
      v = A.apply(y);
      const double rv = rhat.dot(v);
      if (std::abs(rv) < 1e-300) {
        broke = true;
        break;
      }
      alpha = rho / rv;
      const VectorXd s = r - alpha * v;
      ++iters;
      if (s.norm() <= tol * bn) {
        x += alpha * y;
        r = s;
        history.push_back(r.norm() / bn);
        break;
      }
      const VectorXd z = A.precondition(s);
      const VectorXd t = A.apply(z);
      const double tt = t.squaredNorm();
      omega = tt > 0 ? t.dot(s) / tt : 0.0;
      x += alpha * y + omega * z;
      r = s - omega * t;
      history.push_back(r.norm() / bn);
      if (!std::isfinite(history.back())) return KrylovStatus::breakdown;
      if (r.norm() <= tol * bn) break;
    }
    r = b - A.apply(x);
    if (r.norm() <= tol * bn) return KrylovStatus::converged;
    if (broke) return KrylovStatus::breakdown;
    if (iters >= max_iter) return KrylovStatus::exhausted;
  }
  return KrylovStatus::exhausted;
}

KrylovStatus gmres(const SaddleSystem& A, const VectorXd& b, VectorXd& x, double tol, int max_iter, int m,
                   std::vector<double>& history, int& iters) {
  const double bn = b.norm();
  const Eigen::Index n = b.size();
  while (iters < max_iter) {
    VectorXd r = b - A.apply(x);
    double beta = r.norm();
    if (beta <= tol * bn) return KrylovStatus::converged;
    Eigen::MatrixXd V(n, m + 1), H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::MatrixXd Z(n, m);
    VectorXd cs = VectorXd::Zero(m), sn = VectorXd::Zero(m), e = VectorXd::Zero(m + 1);
    e[0] = beta;
    V.col(0) = r / beta;
    int k = 0;
    for (; k < m && iters < max_iter; ++k) {
      Z.col(k) = A.precondition(V.col(k));
      VectorXd w = A.apply(Z.col(k));
      for (int i = 0; i <= k; ++i) {
        H(i, k) = w.dot(V.col(i));
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      if (H(k + 1, k) > 0) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double d = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = d > 0 ? H(k, k) / d : 1;
      sn[k] = d > 0 ? H(k + 1, k) / d : 0;
      H(k, k) = d;
      H(k + 1, k) = 0;
      e[k + 1] = -sn[k] * e[k];
      e[k] = cs[k] * e[k];
      ++iters;
      history.push_back(std::abs(e[k + 1]) / bn);
      if (std::abs(e[k + 1]) <= 0.5 * tol * bn || H(k, k) == 0) {
        ++k;
        break;
      }
    }
    const VectorXd yk = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(e.head(k));
    x += Z.leftCols(k) * yk;
  }
  return (b - A.apply(x)).norm() <= tol * bn ? KrylovStatus::converged : KrylovStatus::exhausted;
}

}  // namespace

SolveResult solve_coupled(const AssembledSystem& sys, const InterfaceBlock* block, const SolverConfig& cfg,
                          const VectorXd* p0) {
  cfg.validate();
  SaddleSystem A(sys, block, cfg);
  const Eigen::Index nu = A.nu(), np = A.size() - nu;
  VectorXd b = VectorXd::Zero(A.size());
  b.head(nu) = reduced_rhs(sys, block);
  SolveResult res;
  res.rhs_norm = b.norm();
  if (res.rhs_norm == 0) {
    res.u = VectorXd::Zero(nu);
    res.p = VectorXd::Zero(sys.C.cols());
    return res;
  }
  VectorXd x = VectorXd::Zero(A.size());
  if (p0 && p0->size() == np) {
    VectorXd pp = *p0;
    A.project(pp);
    x.tail(np) = pp;
  }
  x.head(nu) = A.solve_velocity(b.head(nu) - A.grad(x.tail(np)));
  int iters = 0;
  KrylovStatus st;
  if (cfg.method == SolverConfig::Method::bicgstab) {
    st = bicgstab(A, b, x, cfg.tol, cfg.max_iter, res.history, iters);
    if (st != KrylovStatus::converged) {
      res.fallback = true;
      st = gmres(A, b, x, cfg.tol, iters + cfg.max_iter, cfg.restart, res.history, iters);
    }
  } else {
    st = gmres(A, b, x, cfg.tol, cfg.max_iter, cfg.restart, res.history, iters);
  }
  res.iterations = iters;
  res.residual = (b - A.apply(x)).norm() / res.rhs_norm;
  if (st != KrylovStatus::converged) {
    std::ostringstream os;
    os << "saddle solver did not converge after " << iters << " iterations (residual " << res.residual << ")";
    throw SolverFailure(os.str(), res.history);
  }
  res.u = x.head(nu);
  res.p = x.segment(nu, sys.C.cols());
  if (sys.xfem()) res.lambda = x[A.size() - 1];
  normalize_pressure(sys.pspace, sys.pressure_weights, res.p);
  return res;
}

InterfaceUpdate recover_interface(const InterfaceBlock& block, const AssembledSystem& sys, const VectorXd& u) {
  const Eigen::Index K = static_cast<Eigen::Index>(block.vertex_count());
  VectorXd b(3 * K);
  b.head(K) = -(sys.N.transpose() * u);
  b.tail(2 * K) = -(sys.AG * sys.X);
  const VectorXd z = block.solve(b);
  InterfaceUpdate up;
  up.kappa = z.head(K);
  up.dX.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) up.dX[k] = z.segment<2>(K + 2 * k);
  return up;
}

}  // namespace twophase
