#include "copr/copr.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace copr {

double misfit(const PropagationMatrix& U, const CVec& a, const RVec& y) {
  if (a.size() != U.cols()) throw DimensionMismatch("misfit: length of a != n_a");
  if (y.size() != U.rows()) throw DimensionMismatch("misfit: length of y != n_y");
  return (y - U.apply(a).cwiseAbs2()).cwiseAbs().sum();
}

CVec magnitude_least_squares(const PropagationMatrix& U, const RVec& y) {
  if (y.size() != U.rows()) throw DimensionMismatch("length of y != n_y");
  const CVec amp = y.cwiseMax(0.0).cwiseSqrt().cast<cplx>();
  if (U.is_factored() && U.rows() == U.blocks() * U.cols())
    return U.apply_adjoint(amp) / static_cast<double>(U.blocks());
  return U.dense().completeOrthogonalDecomposition().solve(amp);
}

CoprResult copr(const PropagationMatrix& U, const RVec& y, const CoprOptions& opts) {
  if (!(opts.tau > 0.0)) throw InvalidArgument("copr: tau must be > 0");
  if (opts.max_outer < 1) throw InvalidArgument("copr: max_outer must be >= 1");
  if (!(opts.lambda >= 0.0)) throw InvalidArgument("copr: lambda must be >= 0");
  if (y.size() != U.rows()) throw DimensionMismatch("copr: length of y != n_y");

  CVec b = opts.b0 ? *opts.b0 : CVec(-magnitude_least_squares(U, y));
  if (b.size() != U.cols()) throw DimensionMismatch("copr: length of b0 != n_a");

  AdmmOptions inner = opts.inner;
  inner.lambda = opts.lambda;
  const double n_y = static_cast<double>(y.size());
  const double floor = std::min(1e-8, opts.inner.tol);
  double current = misfit(U, -b, y);

  CoprResult out;
  out.a = -b;
  for (int k = 1; k <= opts.max_outer; ++k) {
    inner.tol = std::clamp(0.1 * current / n_y, floor, opts.inner.tol);
    AdmmResult r;
    try {
      NormalFactorization nf = NormalFactorization::assemble(U, b);
      if (inner.lambda == 0.0) nf.factorize();
      r = nn_admm(U, b, y, inner, nf);
    } catch (const Error& e) {
      throw CoprFailure(std::string("copr: outer iteration ") +
                            std::to_string(k) + ": " + e.what(),
                        out);
    }
    out.a = std::move(r.a);
    const double previous = current;
    current = misfit(U, out.a, y);
    out.total_inner += r.iterations;
    out.inner_stalls += r.trace.inner_stalls;
    out.outer_trace.push_back(
        {k, current, r.nuclear_norm, r.iterations, r.trace.converged});
    if (current <= opts.tau || (opts.stop_when && opts.stop_when(out.a))) {
      out.converged = true;
      break;
    }
    if (opts.min_progress > 0.0 && k > 1 &&
        previous - current <= opts.min_progress * previous)
      break;
    b = -out.a;
  }
  return out;
}

void write_outer_csv(std::ostream& os, const CoprResult& r) {
  os << "outer,misfit,nuclear_norm,inner_iters,inner_converged\n"
     << std::setprecision(17);
  for (const auto& row : r.outer_trace)
    os << row.outer << ',' << row.misfit << ',' << row.nuclear_norm << ','
       << row.inner_iters << ',' << (row.inner_converged ? 1 : 0) << '\n';
}

}  // namespace copr
