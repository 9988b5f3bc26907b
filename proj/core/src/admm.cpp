#include "copr/admm.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace copr {

namespace {

RVec embed(const CVec& a) {
  RVec x(2 * a.size());
  x.head(a.size()) = a.real();
  x.tail(a.size()) = a.imag();
  return x;
}

CVec unembed(const RVec& x) {
  const auto n = x.size() / 2;
  CVec a(n);
  a.real() = x.head(n);
  a.imag() = x.tail(n);
  return a;
}

double l1_norm(const CVec& a) { return a.cwiseAbs().sum(); }

bool all_finite(const CVec& a) { return a.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// NormalFactorization

NormalFactorization NormalFactorization::assemble(const PropagationMatrix& U,
                                                  const CVec& b) {
  if (b.size() != U.cols())
    throw DimensionMismatch("precompute_normal: length of b != n_a");
  NormalFactorization nf;
  nf.beta_ = U.apply(b);

  const CMat& Ud = U.dense();
  const auto n = Ud.cols();

  // ||A B x||^2 = 2 ||U a||^2 + 4 sum_i Re(conj(beta_i) (U a)_i)^2.
  const CMat H = Ud.adjoint() * Ud;
  const CMat C = nf.beta_.conjugate().asDiagonal() * Ud;
  RMat W(Ud.rows(), 2 * n);
  W.leftCols(n) = C.real();
  W.rightCols(n) = -C.imag();

  RMat N(2 * n, 2 * n);
  N.topLeftCorner(n, n) = H.real();
  N.topRightCorner(n, n) = -H.imag();
  N.bottomLeftCorner(n, n) = H.imag();
  N.bottomRightCorner(n, n) = H.real();
  N *= 2.0;
  N.noalias() += 4.0 * W.transpose() * W;
  // Symmetrize away rounding asymmetry from the two products.
  nf.normal_ = 0.5 * (N + N.transpose());
  return nf;
}

void NormalFactorization::factorize() {
  Eigen::LLT<RMat> llt(normal_);
  const double rc = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  rcond_ = rc;
  if (llt.info() != Eigen::Success || !(rc > 1e-12)) {
    throw RankDeficientError(
        "normal matrix B^T A^T A B is singular or ill-conditioned (rcond " +
            std::to_string(rc) + ")",
        rc);
  }
  llt_ = std::move(llt);
}

RVec NormalFactorization::solve(const RVec& v) const {
  if (!llt_) throw NumericalFailure("normal matrix has not been factorized");
  return llt_->solve(v);
}

double NormalFactorization::largest_eigenvalue() const {
  if (lmax_ >= 0.0) return lmax_;
  const auto n = normal_.rows();
  RVec v = RVec::Ones(n) / std::sqrt(static_cast<double>(n));
  double lam = 0.0;
  for (int k = 0; k < 500; ++k) {
    RVec w = normal_ * v;
    const double nw = w.norm();
    if (nw == 0.0) {
      lam = 0.0;
      break;
    }
    const double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - lam) <= 1e-12 * std::abs(next)) {
      lam = next;
      break;
    }
    lam = next;
  }
  // Power iteration approaches from below; keep the step conservative.
  lmax_ = 1.01 * lam;
  return lmax_;
}

NormalFactorization precompute_normal(const PropagationMatrix& U, const CVec& b) {
  NormalFactorization nf = NormalFactorization::assemble(U, b);
  nf.factorize();
  return nf;
}

// ---------------------------------------------------------------------------
// ADMM steps

BlockMatrix AdmmState::scaled_dual() const {
  BlockMatrix out = Yd;
  for (auto& b : out) b /= rho;
  return out;
}

RVec a_update_rhs(const BlockMatrix& Z, const NormalFactorization& nf,
                  const PropagationMatrix& U, const RVec& y) {
  const CVec& beta = nf.beta();
  const auto n_y = y.size();
  if (static_cast<Eigen::Index>(Z.size()) != n_y || beta.size() != n_y)
    throw DimensionMismatch("a_update: block count != n_y");

  // Per block, the a-dependent entries are
  //   Re c = y + |beta|^2 + 2 (Re beta Re alpha + Im beta Im alpha),
  //   t = conj(alpha) + conj(beta),  l = alpha + beta,
  // so (A B)^T d collapses to U^H w with w = g_p - j g_r.
  CVec w(n_y);
  for (Eigen::Index i = 0; i < n_y; ++i) {
    const Block2& z = Z[i];
    const double rb = beta(i).real();
    const double ib = beta(i).imag();
    const double d1 = z(0, 0).real() - y(i) - (rb * rb + ib * ib);
    const double d2 = z(0, 1).real() - rb;
    const double d3 = z(1, 0).real() - rb;
    const double d4 = z(0, 1).imag() + ib;
    const double d5 = z(1, 0).imag() - ib;
    const double gp = 2.0 * rb * d1 + d2 + d3;
    const double gr = -2.0 * ib * d1 + d4 - d5;
    w(i) = cplx(gp, -gr);
  }
  return embed(U.apply_adjoint(w));
}

namespace {

BlockMatrix shifted_primal(const AdmmState& st) {
  if (!(st.rho > 0.0)) throw InvalidArgument("ADMM penalty rho must be > 0");
  if (st.X.size() != st.Yd.size())
    throw DimensionMismatch("X and Y block counts differ");
  BlockMatrix Z = st.X;
  for (std::size_t i = 0; i < Z.size(); ++i) Z[i] += st.Yd[i] / st.rho;
  return Z;
}

}  // namespace

CVec a_update(const AdmmState& state, const NormalFactorization& nf,
              const PropagationMatrix& U, const CVec& b, const RVec& y) {
  if (b.size() != U.cols()) throw DimensionMismatch("a_update: length of b");
  const RVec rhs = a_update_rhs(shifted_primal(state), nf, U, y);
  return unembed(nf.solve(rhs));
}

CVec a_update_l1(const AdmmState& state, const NormalFactorization& nf,
                 const PropagationMatrix& U, const CVec& b, const RVec& y,
                 double lambda, const L1InnerOptions& inner) {
  if (!(lambda >= 0.0)) throw InvalidArgument("l1 weight must be >= 0");
  if (lambda == 0.0) return a_update(state, nf, U, b, y);
  if (b.size() != U.cols()) throw DimensionMismatch("a_update_l1: length of b");

  const RVec rhs = a_update_rhs(shifted_primal(state), nf, U, y);
  const RMat& N = nf.normal_matrix();
  const auto n = U.cols();
  const double L = nf.largest_eigenvalue();
  if (!(L > 0.0)) return CVec::Zero(n);
  // (rho/2)(x^T N x - 2 x^T rhs) + lambda ||a||_1, divided through by rho.
  const double kappa = lambda / state.rho;
  const double shrink = kappa / L;

  auto objective = [&](const RVec& x) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) g += std::hypot(x(i), x(i + n));
    return 0.5 * x.dot(N * x) - x.dot(rhs) + kappa * g;
  };
  auto prox = [&](RVec& x) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::hypot(x(i), x(i + n));
      const double s = mag > shrink ? 1.0 - shrink / mag : 0.0;
      x(i) *= s;
      x(i + n) *= s;
    }
  };

  RVec x = state.a.size() == n ? embed(state.a) : RVec::Zero(2 * n);
  RVec z = x;
  double t = 1.0;
  double f_old = objective(x);
  RVec best = x;
  double f_best = f_old;
  for (int k = 0; k < inner.max_iter; ++k) {
    RVec next = z - (N * z - rhs) / L;
    prox(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - x);
    x = std::move(next);
    t = t_next;
    const double f = objective(x);
    if (f < f_best) {
      f_best = f;
      best = x;
    }
    if (std::abs(f - f_old) <= inner.rel_tol * std::max(1.0, std::abs(f)))
      return unembed(best);
    f_old = f;
  }
  throw ConvergenceError("l1 a-update did not converge", unembed(best));
}

BlockMatrix x_update(const BlockLifted& Mplus, const BlockMatrix& Yd, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("ADMM penalty rho must be > 0");
  if (static_cast<Eigen::Index>(Yd.size()) != Mplus.size())
    throw DimensionMismatch("x_update: block counts differ");
  BlockMatrix X(Yd.size());
  const double thr = 1.0 / rho;
  for (std::size_t i = 0; i < X.size(); ++i)
    X[i] = svt(Mplus.block(static_cast<Eigen::Index>(i)) - Yd[i] / rho, thr);
  return X;
}

BlockMatrix dual_update(const BlockMatrix& Yd, const BlockMatrix& X,
                        const BlockLifted& M, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("ADMM penalty rho must be > 0");
  if (Yd.size() != X.size() || static_cast<Eigen::Index>(X.size()) != M.size())
    throw DimensionMismatch("dual_update: block counts differ");
  BlockMatrix out(Yd.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = Yd[i] + rho * (X[i] - M.block(static_cast<Eigen::Index>(i)));
  return out;
}

double rho_update(AdmmState& state, const ResidualBalancing& rb) {
  double factor = 1.0;
  if (state.primal_res > rb.mu * state.dual_res) {
    factor = rb.tau;
  } else if (state.dual_res > rb.mu * state.primal_res) {
    factor = 1.0 / rb.tau;
  }
  state.rho *= factor;
  return factor;
}

void write_trace_csv(std::ostream& os, const SolveTrace& trace,
                     bool include_timing) {
  os << "iter,nuclear_norm,primal_res,dual_res,rho";
  if (include_timing) os << ",ms";
  os << '\n' << std::setprecision(17);
  for (const auto& r : trace.rows) {
    os << r.iter << ',' << r.nuclear_norm << ',' << r.primal_res << ','
       << r.dual_res << ',' << r.rho;
    if (include_timing) os << ',' << r.ms;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Driver

AdmmResult nn_admm(const PropagationMatrix& U, const CVec& b, const RVec& y,
                   const AdmmOptions& opts) {
  NormalFactorization nf = NormalFactorization::assemble(U, b);
  if (opts.lambda == 0.0) nf.factorize();
  return nn_admm(U, b, y, opts, nf);
}

AdmmResult nn_admm(const PropagationMatrix& U, const CVec& b, const RVec& y,
                   const AdmmOptions& opts, const NormalFactorization& nf) {
  using clock = std::chrono::steady_clock;
  if (b.size() != U.cols()) throw DimensionMismatch("nn_admm: length of b != n_a");
  if (y.size() != U.rows()) throw DimensionMismatch("nn_admm: length of y != n_y");
  if (!(opts.rho0 > 0.0)) throw InvalidArgument("rho0 must be > 0");
  if (!(opts.tol > 0.0)) throw InvalidArgument("tol must be > 0");
  if (opts.max_iter < 0) throw InvalidArgument("max_iter must be >= 0");
  if (!(opts.lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");

  const CVec& beta = nf.beta();
  const double res_tol = opts.tol * std::sqrt(static_cast<double>(y.size()));

  AdmmState st;
  st.a = -b;
  st.rho = opts.rho0;
  BlockLifted M = build_M_from_fields(U.apply(st.a), beta, y);
  st.X = M.to_blocks();
  st.Yd.assign(st.X.size(), Block2::Zero());

  AdmmResult out;
  out.nuclear_norm = nuclear_norm(M);
  double prev = out.nuclear_norm + opts.lambda * l1_norm(st.a);

  for (int it = 1; it <= opts.max_iter; ++it) {
    const auto t0 = clock::now();
    CVec a;
    if (opts.lambda > 0.0) {
      try {
        a = a_update_l1(st, nf, U, b, y, opts.lambda, opts.inner);
      } catch (const ConvergenceError& e) {
        a = e.best_iterate();
        ++out.trace.inner_stalls;
      }
    } else {
      a = a_update(st, nf, U, b, y);
    }
    if (!all_finite(a))
      throw NumericalFailure("nn_admm: non-finite coefficients at iteration " +
                             std::to_string(it));
    st.a = std::move(a);

    M = build_M_from_fields(U.apply(st.a), beta, y);
    BlockMatrix X_prev = std::move(st.X);
    st.X = x_update(M, st.Yd, st.rho);
    st.Yd = dual_update(st.Yd, st.X, M, st.rho);
    st.primal_res = std::sqrt(frobenius_distance(st.X, M));
    st.dual_res = st.rho * std::sqrt(frobenius_distance(st.X, X_prev));
    st.iter = it;

    const double nn = nuclear_norm(M);
    const double cur = nn + opts.lambda * l1_norm(st.a);
    if (!std::isfinite(cur))
      throw NumericalFailure("nn_admm: non-finite objective at iteration " +
                             std::to_string(it));
    out.nuclear_norm = nn;

    const double ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    out.trace.rows.push_back({it, nn, st.primal_res, st.dual_res, st.rho, ms});

    if (std::abs(cur - prev) <= opts.tol && st.primal_res <= res_tol &&
        st.dual_res <= res_tol) {
      out.trace.converged = true;
      break;
    }
    rho_update(st, opts.balancing);
    prev = cur;
  }
  out.a = std::move(st.a);
  out.iterations = st.iter;
  return out;
}

}  // namespace copr
