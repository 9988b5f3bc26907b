#include "copr/fixedpoint.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace copr {

double f_value(cplx x, cplx a, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("f_value: y must be >= 0");
  const double r = y - 2.0 * (x * std::conj(a)).real() + std::norm(a);
  const double s2 = std::norm(x - a);
  return r * r + 2.0 * s2 + 1.0 + 2.0 * std::abs(r - s2);
}

double g_poly(double t, double y) {
  return ((t + 2.0 * (1.0 - y)) * t + (y * y - 6.0 * y + 1.0)) * t - 4.0 * y;
}

double lambda_root(double y) {
  if (!(y > 0.0)) throw InvalidArgument("lambda_root: y must be > 0");
  double lo = 2.25 * y;
  double hi = 4.0 * y;
  // (9/4)y only brackets the root for y below about 1.3.
  if (g_poly(lo, y) >= 0.0) lo = 0.0;
  double t = 0.5 * (lo + hi);
  for (int k = 0; k < 100; ++k) {
    const double g = g_poly(t, y);
    if (g == 0.0) return t;
    if (g < 0.0) lo = t; else hi = t;
    const double dg = (3.0 * t + 4.0 * (1.0 - y)) * t + (y * y - 6.0 * y + 1.0);
    double next = dg != 0.0 ? t - g / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 1e-15 * t || hi - lo <= 1e-15 * t) break;
  }
  return t;
}

ScalarImage t_scalar(cplx a, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("t_scalar: y must be >= 0");
  ScalarImage out;
  if (y == 0.0) {
    out.point = 0.5 * a;
    return out;
  }
  const double mag = std::abs(a);
  if (mag == 0.0) {
    out.disk = true;
    out.radius = std::sqrt(y);
    return out;
  }
  const double lam = lambda_root(y);
  if (mag <= std::sqrt(lam)) {
    out.point = (std::sqrt(y) / mag) * a;
  } else {
    const double n = mag * mag;
    out.point = ((y + n + 1.0) / (2.0 * (n + 1.0))) * a;
  }
  return out;
}

CVec t_identity(const CVec& a, const RVec& y, std::vector<Eigen::Index>* set_valued) {
  if (a.size() != y.size()) throw DimensionMismatch("t_identity: length mismatch");
  CVec out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const ScalarImage s = t_scalar(a(i), y(i));
    out(i) = s.disk ? cplx(0.0, 0.0) : s.point;
    if (s.disk && set_valued) set_valued->push_back(i);
  }
  return out;
}

double unitarity_deviation(const PropagationMatrix& U) {
  if (U.rows() != U.cols()) return std::numeric_limits<double>::infinity();
  if (U.is_factored() && U.blocks() == 1) {
    // U^H U = diag(|d|^2) for one diagonal followed by a unitary DFT.
    const CVec ones = CVec::Ones(U.cols());
    return (U.apply_adjoint(U.apply(ones)) - ones).cwiseAbs().maxCoeff();
  }
  const CMat& D = U.dense();
  const CMat G = D.adjoint() * D - CMat::Identity(D.cols(), D.cols());
  return G.cwiseAbs().maxCoeff();
}

CVec t_unitary(const CVec& a, const RVec& y, const PropagationMatrix& U) {
  if (a.size() != U.cols() || y.size() != U.rows())
    throw DimensionMismatch("t_unitary: dimensions disagree");
  const double dev = unitarity_deviation(U);
  if (!(dev <= 1e-10))
    throw InvalidArgument("t_unitary: U is not unitary (max |U^H U - I| = " +
                          std::to_string(dev) + ")");
  return U.apply_adjoint(t_identity(U.apply(a), y));
}

double distance_to_solution_set(const PropagationMatrix& U, const CVec& a,
                                const RVec& y) {
  return (U.apply(a).cwiseAbs() - y.cwiseMax(0.0).cwiseSqrt()).norm();
}

PicardResult picard(const CVec& a0, const RVec& y, const PropagationMatrix& U,
                    int steps) {
  if (steps < 0) throw InvalidArgument("picard: steps must be >= 0");
  PicardResult out;
  out.a = a0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double prev = distance_to_solution_set(U, a0, y);
  out.rows.push_back({0, prev, nan});
  for (int k = 1; k <= steps; ++k) {
    out.a = t_unitary(out.a, y, U);
    const double d = distance_to_solution_set(U, out.a, y);
    out.rows.push_back({k, d, prev > 0.0 ? d / prev : nan});
    prev = d;
  }
  return out;
}

void write_picard_csv(std::ostream& os, const std::vector<PicardRow>& rows) {
  os << "k,dist,ratio\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.k << ',' << r.dist << ',' << r.ratio << '\n';
}

}  // namespace copr
