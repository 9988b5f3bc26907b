#pragma once

#include "copr/admm.hpp"
#include "copr/forward_model.hpp"
#include "copr/types.hpp"

namespace copr {

/// p_i <- sqrt(y_i) p_i / |p_i|; zero entries become sqrt(y_i).
CVec project_magnitude(const CVec& p, const RVec& y);

/// Least-squares projection onto range(U): argmin_a ||U a - p||.
class RangeProjector {
 public:
  explicit RangeProjector(const PropagationMatrix& U);
  CVec coefficients(const CVec& p) const;
  CVec project(const CVec& p) const { return U_->apply(coefficients(p)); }

 private:
  const PropagationMatrix* U_;
  bool scaled_adjoint_ = false;
  Eigen::LLT<CMat> llt_;
};

struct ApResult {
  CVec a;
  /// nuclear_norm holds ||M(U, a, -a, y)||_* = misfit + n_y, primal_res the
  /// misfit ||y - |U a|^2||_1, dual_res ||a - a_prev||_2 and rho is 0.
  SolveTrace trace;
};

ApResult alternating_projections(const PropagationMatrix& U, const RVec& y,
                                 const CVec& a0, int iters);

}  // namespace copr
