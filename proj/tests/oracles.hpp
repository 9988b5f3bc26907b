#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's lifted/admm code paths.

#include <random>

#include <Eigen/Dense>

#include "copr/types.hpp"

namespace oracle {

using copr::CMat;
using copr::CVec;
using copr::RMat;
using copr::RVec;
using copr::cplx;

inline CVec random_cvec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CVec v(n);
  for (auto& x : v) x = cplx(nd(rng), nd(rng));
  return v;
}

inline CMat random_cmat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CMat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

inline CMat random_unitary(std::mt19937_64& rng, Eigen::Index n) {
  const Eigen::HouseholderQR<CMat> qr(random_cmat(rng, n, n));
  return qr.householderQ() * CMat::Identity(n, n);
}

/// Dense 2n_y x 2n_y M in the unpermuted layout
///   [[diag(y) + X^H ... , (Ua + Ub)^H-part], ...]
/// assembled entry by entry from the defining expressions:
///   top-left  diag(y_i + conj(Ua)_i (Ub)_i + conj(Ub)_i (Ua)_i + |(Ub)_i|^2)
///   top-right diag(conj(Ua + Ub))
///   bottom-left diag(Ua + Ub), bottom-right I.
inline CMat dense_M(const CMat& U, const CVec& a, const CVec& b, const RVec& y) {
  const auto n = y.size();
  const CVec al = U * a;
  const CVec be = U * b;
  CMat M = CMat::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = y(i) + std::conj(al(i)) * be(i) + std::conj(be(i)) * al(i) + std::norm(be(i));
    M(i, n + i) = std::conj(al(i) + be(i));
    M(n + i, i) = al(i) + be(i);
    M(n + i, n + i) = 1.0;
  }
  return M;
}

inline double dense_nuclear(const CMat& M) {
  return Eigen::JacobiSVD<CMat>(M).singularValues().sum();
}

/// prox of t ||.||_* via a dense SVD.
inline CMat dense_svt(const CMat& C, double t) {
  const Eigen::JacobiSVD<CMat> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RVec s = (svd.singularValues().array() - t).max(0.0);
  return svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
}

/// Real affine map x -> vec_R(M(x)) with x = [Re a; Im a], probed column by
/// column from dense_M. Returns (G, h) with vec_R(M) = G x + h.
struct Affine {
  RMat G;
  RVec h;
};

inline RVec vec_real(const CMat& M) {
  RVec v(2 * M.size());
  for (Eigen::Index k = 0; k < M.size(); ++k) {
    v(2 * k) = M.data()[k].real();
    v(2 * k + 1) = M.data()[k].imag();
  }
  return v;
}

inline Affine affine_M(const CMat& U, const CVec& b, const RVec& y) {
  const auto n_a = U.cols();
  Affine f;
  f.h = vec_real(dense_M(U, CVec::Zero(n_a), b, y));
  f.G.resize(f.h.size(), 2 * n_a);
  for (Eigen::Index k = 0; k < 2 * n_a; ++k) {
    CVec e = CVec::Zero(n_a);
    e(k % n_a) = k < n_a ? cplx(1, 0) : cplx(0, 1);
    f.G.col(k) = vec_real(dense_M(U, e, b, y)) - f.h;
  }
  return f;
}

/// argmin_a ||Z - M(U, a, b, y)||_F by a dense QR least-squares solve.
inline CVec dense_a_update(const CMat& U, const CVec& b, const RVec& y, const CMat& Z) {
  const Affine f = affine_M(U, b, y);
  const RVec x = f.G.colPivHouseholderQr().solve(vec_real(Z) - f.h);
  const auto n = U.cols();
  CVec a(n);
  a.real() = x.head(n);
  a.imag() = x.tail(n);
  return a;
}

/// Embed 2x2 blocks (block i acting on rows/cols i and n+i) into a dense
/// 2n x 2n matrix.
template <typename Blocks>
CMat embed_blocks(const Blocks& B) {
  const auto n = static_cast<Eigen::Index>(B.size());
  CMat M = CMat::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = B[i](0, 0);
    M(i, n + i) = B[i](0, 1);
    M(n + i, i) = B[i](1, 0);
    M(n + i, n + i) = B[i](1, 1);
  }
  return M;
}

/// f(x) = r^2 + 2 s^2 + 1 + 2 |r - s^2| minimized over a polar grid with
/// local refinement; returns the minimizer.
template <typename F>
cplx minimize_polar(F f, double rmax, int radii = 400, int angles = 256) {
  cplx best = 0.0;
  double fbest = f(best);
  for (int i = 0; i <= radii; ++i)
    for (int k = 0; k < angles; ++k) {
      const cplx z = std::polar(rmax * i / radii, 2.0 * M_PI * k / angles);
      const double v = f(z);
      if (v < fbest) {
        fbest = v;
        best = z;
      }
    }
  // Pattern search refinement.
  double step = rmax / radii;
  while (step > 1e-12) {
    bool moved = false;
    const double r = std::abs(best);
    const cplx radial = r > 0 ? best / r : cplx(1, 0);
    const cplx moves[] = {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1),
                          radial, -radial, radial * cplx(0, 1), -radial * cplx(0, 1)};
    for (const cplx d : moves) {
      const cplx z = best + step * d;
      const double v = f(z);
      if (v < fbest) {
        fbest = v;
        best = z;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

}  // namespace oracle
