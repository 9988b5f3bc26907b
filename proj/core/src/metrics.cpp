#include "copr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace copr {

namespace {

double wrap(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

Alignment finish(const CVec& a_hat, const CVec& a_star, cplx c) {
  return {c, (c * a_hat - a_star).squaredNorm()};
}

void check_pair(const CVec& a_hat, const CVec& a_star) {
  if (a_hat.size() != a_star.size())
    throw DimensionMismatch("piston_align: length mismatch");
  if (a_hat.squaredNorm() == 0.0)
    throw InvalidArgument("piston_align: alignment undefined for a_hat = 0");
}

}  // namespace

Alignment piston_align(const CVec& a_hat, const CVec& a_star) {
  check_pair(a_hat, a_star);
  const cplx ip = a_hat.dot(a_star);  // a_hat^H a_star
  const cplx c = std::abs(ip) > 0.0 ? ip / std::abs(ip) : cplx(1.0, 0.0);
  return finish(a_hat, a_star, c);
}

Alignment piston_align_qr(const CVec& a_hat, const CVec& a_star) {
  check_pair(a_hat, a_star);
  CMat P(a_hat.size(), 2);
  P.col(0) = a_hat;
  P.col(1) = a_star;
  const Eigen::HouseholderQR<CMat> qr(P);
  const CMat R = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  const cplx ratio = R(0, 1) / R(0, 0);
  const cplx c = std::abs(ratio) > 0.0 ? ratio / std::abs(ratio) : cplx(1.0, 0.0);
  return finish(a_hat, a_star, c);
}

double snr_db(const RVec& y_clean, const RVec& y_noisy) {
  if (y_clean.size() != y_noisy.size()) throw DimensionMismatch("snr_db: length mismatch");
  const double sig = y_clean.squaredNorm();
  if (sig == 0.0) throw InvalidArgument("snr_db: clean signal is zero");
  const double noise = (y_noisy - y_clean).squaredNorm();
  if (noise == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(noise / sig);
}

double strehl(const RMat& phi_true, const RMat& phi_hat, const Mask& mask) {
  if (phi_true.rows() != phi_hat.rows() || phi_true.cols() != phi_hat.cols() ||
      mask.rows() != phi_true.rows() || mask.cols() != phi_true.cols())
    throw DimensionMismatch("strehl: shape mismatch");
  std::vector<double> res;
  double s = 0.0, c = 0.0;
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j)) {
        const double r = wrap(phi_true(i, j) - phi_hat(i, j));
        res.push_back(r);
        s += std::sin(r);
        c += std::cos(r);
      }
  if (res.empty()) throw InvalidArgument("strehl: empty mask");
  const double piston = std::atan2(s, c);
  double ss = 0.0;
  for (double r : res) {
    const double d = wrap(r - piston);
    ss += d * d;
  }
  const double delta2 = ss / static_cast<double>(res.size());
  return std::clamp(std::exp(-delta2), 0.0, 1.0);
}

RMat phase_from_coeffs(const BasisSet& basis, const CVec& a) {
  if (a.size() != basis.size()) throw DimensionMismatch("phase_from_coeffs: length of a");
  const int m = basis.grid.m;
  CMat field = CMat::Zero(m, m);
  for (int i = 0; i < basis.size(); ++i) field += a(i) * basis.functions[i].cast<cplx>();
  RMat phase = RMat::Zero(m, m);
  bool any = false;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (basis.grid.mask(i, j)) {
        if (std::abs(field(i, j)) > 0.0) any = true;
        phase(i, j) = std::arg(field(i, j));
      }
  if (!any) throw NumericalFailure("phase_from_coeffs: field vanishes on the aperture");
  return phase;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  return values[k - 1];
}

}  // namespace copr
