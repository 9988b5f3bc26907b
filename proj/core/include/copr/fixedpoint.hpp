#pragma once

#include <iosfwd>
#include <vector>

#include "copr/forward_model.hpp"
#include "copr/types.hpp"

namespace copr {

/// r^2 + 2 s^2 + 1 + 2 |r - s^2| with r = y - 2 Re(x conj(a)) + |a|^2 and
/// s = |x - a|: the squared nuclear norm of the scalar block M(1, x, -a, y).
double f_value(cplx x, cplx a, double y);

/// g(t) = t^3 + 2 (1 - y) t^2 + (y^2 - 6 y + 1) t - 4 y.
double g_poly(double t, double y);

/// The positive root of g, found by safeguarded Newton inside (9y/4, 4y).
double lambda_root(double y);

/// Value of the scalar operator T_i: either the closed disk |z| <= radius
/// (a_i = 0, y_i > 0) or a single point.
struct ScalarImage {
  bool disk = false;
  cplx point{0.0, 0.0};
  double radius = 0.0;
};

ScalarImage t_scalar(cplx a, double y);

/// Componentwise T for U = I. Disk components select the center 0; their
/// indices are appended to `set_valued` when it is given.
CVec t_identity(const CVec& a, const RVec& y,
                std::vector<Eigen::Index>* set_valued = nullptr);

/// max |(U^H U - I)_{jk}| (or the diagonal modulus deviation for a
/// factored single-diversity operator).
double unitarity_deviation(const PropagationMatrix& U);

/// U^{-1} T(U a). Throws InvalidArgument if U is not unitary to 1e-10.
CVec t_unitary(const CVec& a, const RVec& y, const PropagationMatrix& U);

/// || |U a| - sqrt(y) ||_2, the distance from a to {x : |U x|^2 = y} for
/// unitary U.
double distance_to_solution_set(const PropagationMatrix& U, const CVec& a,
                                const RVec& y);

struct PicardRow {
  int k = 0;
  double dist = 0.0;
  double ratio = 0.0;  // dist_k / dist_{k-1}; NaN for k = 0 or dist_{k-1} = 0
};

struct PicardResult {
  CVec a;
  std::vector<PicardRow> rows;
};

PicardResult picard(const CVec& a0, const RVec& y, const PropagationMatrix& U,
                    int steps);

/// CSV with header k,dist,ratio.
void write_picard_csv(std::ostream& os, const std::vector<PicardRow>& rows);

}  // namespace copr
