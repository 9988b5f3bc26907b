#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "copr/forward_model.hpp"
#include "copr/lifted.hpp"
#include "copr/types.hpp"

namespace copr {

/// The real least-squares system behind the a-update.
///
/// With x = [Re a; Im a], the entries of M(U, a, b, y) that depend on a are
/// an affine function A B x + u_COPR. This caches the 2n_a x 2n_a normal
/// matrix N = B^T A^T A B, its Cholesky factor (when it exists) and the
/// image-plane field beta = U b that fixes A.
class NormalFactorization {
 public:
  /// Builds N in O(n_y n_a^2) without forming A or B; does not factorize.
  static NormalFactorization assemble(const PropagationMatrix& U, const CVec& b);

  const RMat& normal_matrix() const { return normal_; }
  const CVec& beta() const { return beta_; }
  bool factorized() const { return llt_.has_value(); }
  /// Reciprocal condition estimate of N (0 when unavailable).
  double rcond() const { return rcond_; }

  /// Factorizes N; throws RankDeficientError when N is numerically singular.
  void factorize();

  /// N^{-1} v. Requires a prior successful factorize().
  RVec solve(const RVec& v) const;
  RVec multiply(const RVec& v) const { return normal_ * v; }

  /// Largest eigenvalue of N by power iteration (cached).
  double largest_eigenvalue() const;

 private:
  RMat normal_;
  CVec beta_;
  std::optional<Eigen::LLT<RMat>> llt_;
  double rcond_ = 0.0;
  mutable double lmax_ = -1.0;
};

/// Builds and factorizes the normal matrix for this (U, b).
NormalFactorization precompute_normal(const PropagationMatrix& U, const CVec& b);

/// Scaled-residual balancing (Boyd et al.): grow rho when the primal
/// residual dominates by more than mu, shrink it when the dual does.
struct ResidualBalancing {
  double mu = 10.0;
  double tau = 2.0;
};

struct L1InnerOptions {
  int max_iter = 500;
  double rel_tol = 1e-8;
};

struct AdmmOptions {
  double rho0 = 1.0;
  double tol = 1e-6;
  int max_iter = 2000;
  /// l1 weight on sum_i |a_i|; 0 disables the sparse variant.
  double lambda = 0.0;
  ResidualBalancing balancing{};
  L1InnerOptions inner{};
};

struct AdmmState {
  CVec a;
  BlockMatrix X;
  /// Unscaled dual variable Y; the scaled dual is Y / rho.
  BlockMatrix Yd;
  double rho = 1.0;
  int iter = 0;
  double primal_res = 0.0;
  double dual_res = 0.0;

  BlockMatrix scaled_dual() const;
};

struct TraceRow {
  int iter = 0;
  double nuclear_norm = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double rho = 0.0;
  double ms = 0.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  /// Inner l1 solves that hit their iteration cap (best iterate was used).
  int inner_stalls = 0;
};

/// CSV with header iter,nuclear_norm,primal_res,dual_res,rho,ms.
void write_trace_csv(std::ostream& os, const SolveTrace& trace,
                     bool include_timing = true);

/// Right-hand side of the a-update least squares, d = u_ADMM - u_COPR,
/// mapped through (A B)^T. `Z` is X + Y / rho.
RVec a_update_rhs(const BlockMatrix& Z, const NormalFactorization& nf,
                  const PropagationMatrix& U, const RVec& y);

/// argmin_a ||X - M(U, a, b, y) + Y / rho||_F^2.
CVec a_update(const AdmmState& state, const NormalFactorization& nf,
              const PropagationMatrix& U, const CVec& b, const RVec& y);

/// argmin_a lambda sum_i |a_i| + (rho/2) ||X - M(U, a, b, y) + Y / rho||_F^2,
/// solved by accelerated proximal gradient on the real embedding, warm
/// started from state.a. Throws ConvergenceError (carrying the best
/// iterate) if the relative objective change does not drop below
/// inner.rel_tol within inner.max_iter steps.
CVec a_update_l1(const AdmmState& state, const NormalFactorization& nf,
                 const PropagationMatrix& U, const CVec& b, const RVec& y,
                 double lambda, const L1InnerOptions& inner = {});

/// Blockwise svt(M_i - Y_i / rho, 1 / rho).
BlockMatrix x_update(const BlockLifted& Mplus, const BlockMatrix& Yd, double rho);

/// Y + rho (X - M).
BlockMatrix dual_update(const BlockMatrix& Yd, const BlockMatrix& X,
                        const BlockLifted& M, double rho);

/// Applies residual balancing to state.rho using state.primal_res and
/// state.dual_res. Y is stored unscaled, so the scaled dual Y / rho is
/// rescaled by the inverse factor automatically. Returns the factor.
double rho_update(AdmmState& state, const ResidualBalancing& rb = {});

struct AdmmResult {
  CVec a;
  SolveTrace trace;
  int iterations = 0;
  /// ||M(U, a, b, y)||_* at the returned a.
  double nuclear_norm = 0.0;
};

/// ADMM for min_a ||M(U, a, b, y)||_* (+ lambda ||a||_1).
///
/// Starts from a = -b, X = M(U, a, b, y), Y = 0 and iterates a-update,
/// X-update, dual ascent and rho adaptation. Stops once the objective
/// changes by at most tol between iterations and both residuals are below
/// tol * sqrt(n_y).
AdmmResult nn_admm(const PropagationMatrix& U, const CVec& b, const RVec& y,
                   const AdmmOptions& opts = {});

/// As above with a prebuilt factorization for this (U, b).
AdmmResult nn_admm(const PropagationMatrix& U, const CVec& b, const RVec& y,
                   const AdmmOptions& opts, const NormalFactorization& nf);

}  // namespace copr
