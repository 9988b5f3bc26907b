#pragma once

#include <vector>

#include "copr/forward_model.hpp"
#include "copr/types.hpp"

namespace copr {

struct Alignment {
  cplx c{1.0, 0.0};
  /// min_{|c| = 1} ||c a_hat - a_star||_2^2.
  double error = 0.0;
};

/// c* = exp(j arg(a_hat^H a_star)).
Alignment piston_align(const CVec& a_hat, const CVec& a_star);

/// The same alignment through the R factor of [a_hat a_star] = QR.
Alignment piston_align_qr(const CVec& a_hat, const CVec& a_star);

/// 10 log10(||y_noisy - y_clean||^2 / ||y_clean||^2); -inf without noise.
double snr_db(const RVec& y_clean, const RVec& y_noisy);

/// exp(-delta^2) where delta is the RMS over the mask of the wrapped,
/// de-pistoned residual phi_true - phi_hat.
double strehl(const RMat& phi_true, const RMat& phi_hat, const Mask& mask);

/// arg(sum_i a_i G_i) on the aperture, 0 elsewhere.
RMat phase_from_coeffs(const BasisSet& basis, const CVec& a);

/// Nearest-rank quantile: the smallest x_(k) with k >= q n.
double quantile(std::vector<double> values, double q);

}  // namespace copr
