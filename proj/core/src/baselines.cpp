#include "copr/baselines.hpp"

#include <chrono>
#include <cmath>

#include "copr/copr.hpp"

namespace copr {

CVec project_magnitude(const CVec& p, const RVec& y) {
  if (p.size() != y.size()) throw DimensionMismatch("project_magnitude: length mismatch");
  CVec out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double amp = std::sqrt(std::max(0.0, y(i)));
    const double mag = std::abs(p(i));
    out(i) = mag > 0.0 ? p(i) * (amp / mag) : cplx(amp, 0.0);
  }
  return out;
}

RangeProjector::RangeProjector(const PropagationMatrix& U) : U_(&U) {
  if (U.is_factored() && U.rows() == U.blocks() * U.cols()) {
    scaled_adjoint_ = true;
    return;
  }
  const CMat& D = U.dense();
  llt_.compute(D.adjoint() * D);
  const double rc = llt_.info() == Eigen::Success ? llt_.rcond() : 0.0;
  if (!(rc > 1e-12))
    throw RankDeficientError("alternating projections: U^H U is singular", rc);
}

CVec RangeProjector::coefficients(const CVec& p) const {
  if (scaled_adjoint_)
    return U_->apply_adjoint(p) / static_cast<double>(U_->blocks());
  return llt_.solve(U_->apply_adjoint(p));
}

ApResult alternating_projections(const PropagationMatrix& U, const RVec& y,
                                 const CVec& a0, int iters) {
  using clock = std::chrono::steady_clock;
  if (iters < 1) throw InvalidArgument("alternating_projections: iters must be >= 1");
  if (a0.size() != U.cols() || y.size() != U.rows())
    throw DimensionMismatch("alternating_projections: dimensions disagree");
  const RangeProjector proj(U);
  const double n_y = static_cast<double>(y.size());
  ApResult out;
  out.a = a0;
  for (int k = 1; k <= iters; ++k) {
    const auto t0 = clock::now();
    CVec next = proj.coefficients(project_magnitude(U.apply(out.a), y));
    if (!next.allFinite())
      throw NumericalFailure("alternating_projections: non-finite iterate");
    const double step = (next - out.a).norm();
    out.a = std::move(next);
    const double mf = misfit(U, out.a, y);
    const double ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    out.trace.rows.push_back({k, mf + n_y, mf, step, 0.0, ms});
  }
  return out;
}

}  // namespace copr
