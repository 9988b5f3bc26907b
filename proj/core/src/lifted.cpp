#include "copr/lifted.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace copr {

Block2 BlockLifted::block(Eigen::Index i) const {
  Block2 b;
  b << cplx(c(i), 0.0), t(i), l(i), cplx(1.0, 0.0);
  return b;
}

BlockMatrix BlockLifted::to_blocks() const {
  BlockMatrix out(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out[i] = block(i);
  return out;
}

BlockLifted build_M_from_fields(const CVec& alpha, const CVec& beta,
                                const RVec& y) {
  if (alpha.size() != y.size() || beta.size() != y.size())
    throw DimensionMismatch("build_M: field lengths differ from n_y");
  BlockLifted M;
  const auto n = y.size();
  M.c.resize(n);
  M.t.resize(n);
  M.l.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx al = alpha(i);
    const cplx be = beta(i);
    // Real by construction: conj(al) be + conj(be) al = 2 Re(conj(al) be).
    M.c(i) = y(i) + 2.0 * (al.real() * be.real() + al.imag() * be.imag()) +
             std::norm(be);
    M.l(i) = al + be;
    M.t(i) = std::conj(al + be);
  }
  return M;
}

BlockLifted build_M(const PropagationMatrix& U, const CVec& a, const CVec& b,
                    const RVec& y) {
  if (a.size() != U.cols() || b.size() != U.cols())
    throw DimensionMismatch("build_M: coefficient length != n_a");
  if (y.size() != U.rows())
    throw DimensionMismatch("build_M: measurement length != n_y");
  return build_M_from_fields(U.apply(a), U.apply(b), y);
}

RVec rank_residuals(const BlockLifted& M) {
  RVec r(M.size());
  for (Eigen::Index i = 0; i < M.size(); ++i)
    r(i) = std::abs(M.c(i) - M.t(i) * M.l(i));
  return r;
}

double block_nuclear_norm(const Block2& B) {
  const double fro2 = B.squaredNorm();
  const double det = std::abs(B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0));
  return std::sqrt(fro2 + 2.0 * det);
}

double nuclear_norm(const BlockLifted& M) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < M.size(); ++i) {
    const double c = M.c(i);
    const cplx tl = M.t(i) * M.l(i);
    const double fro2 = c * c + std::norm(M.t(i)) + std::norm(M.l(i)) + 1.0;
    sum += std::sqrt(fro2 + 2.0 * std::abs(c - tl));
  }
  return sum;
}

double nuclear_norm(const BlockMatrix& M) {
  double sum = 0.0;
  for (const auto& b : M) sum += block_nuclear_norm(b);
  return sum;
}

double frobenius_distance(const BlockMatrix& A, const BlockMatrix& B) {
  if (A.size() != B.size()) throw DimensionMismatch("block counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += (A[i] - B[i]).squaredNorm();
  return s;
}

double frobenius_distance(const BlockMatrix& A, const BlockLifted& B) {
  if (static_cast<Eigen::Index>(A.size()) != B.size())
    throw DimensionMismatch("block counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const auto& a = A[i];
    s += std::norm(a(0, 0) - B.c(i)) + std::norm(a(0, 1) - B.t(i)) +
         std::norm(a(1, 0) - B.l(i)) + std::norm(a(1, 1) - 1.0);
  }
  return s;
}

Block2 SVD2::reconstruct() const {
  return U * sigma.cast<cplx>().asDiagonal() * V.adjoint();
}

namespace {

// Unit vector orthogonal to v (v must be unit length).
Eigen::Vector2cd complement(const Eigen::Vector2cd& v) {
  return Eigen::Vector2cd(-std::conj(v(1)), std::conj(v(0)));
}

// Scale v so that its largest-magnitude entry is real and positive.
void fix_phase(Eigen::Vector2cd& v) {
  const int k = std::abs(v(1)) > std::abs(v(0)) ? 1 : 0;
  const double mag = std::abs(v(k));
  if (mag > 0.0) v *= std::conj(v(k)) / mag;
}

}  // namespace

SVD2 svd2x2(const Block2& B) {
  SVD2 out;
  const double fro2 = B.squaredNorm();
  if (fro2 == 0.0) {
    out.U.setIdentity();
    out.V.setIdentity();
    out.sigma.setZero();
    return out;
  }
  const double det = std::abs(B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0));
  const double sum = std::sqrt(fro2 + 2.0 * det);
  const double diff = std::sqrt(std::max(0.0, fro2 - 2.0 * det));
  const double s1 = 0.5 * (sum + diff);
  const double s2 = s1 > 0.0 ? det / s1 : 0.0;

  // Gram matrix G = B^H B = [[g11, g12], [conj(g12), g22]].
  const Block2 G = B.adjoint() * B;
  const double g11 = G(0, 0).real();
  const double g22 = G(1, 1).real();
  const cplx g12 = G(0, 1);
  const double lam1 = s1 * s1;

  Eigen::Vector2cd v1;
  const Eigen::Vector2cd cand_a(g12, lam1 - g11);
  const Eigen::Vector2cd cand_b(lam1 - g22, std::conj(g12));
  const double na = cand_a.norm();
  const double nb = cand_b.norm();
  if (std::max(na, nb) <= 1e-14 * std::max(1.0, lam1)) {
    // Repeated singular values: any orthonormal basis diagonalizes G.
    // Pivot on the column of B with the larger norm.
    v1 = B.col(1).norm() > B.col(0).norm() ? Eigen::Vector2cd(0, 1)
                                           : Eigen::Vector2cd(1, 0);
  } else {
    v1 = (na >= nb ? cand_a / na : cand_b / nb);
  }
  fix_phase(v1);
  const Eigen::Vector2cd v2 = complement(v1);

  Eigen::Vector2cd u1 = B * v1;
  const double u1n = u1.norm();
  if (u1n > 0.0) {
    u1 /= u1n;
  } else {
    u1 = Eigen::Vector2cd(1, 0);
  }
  Eigen::Vector2cd u2 = complement(u1);
  const cplx z = u2.dot(B * v2);  // u2^H B v2
  if (std::abs(z) > 0.0) u2 *= z / std::abs(z);

  out.U.col(0) = u1;
  out.U.col(1) = u2;
  out.V.col(0) = v1;
  out.V.col(1) = v2;
  out.sigma << s1, s2;
  return out;
}

Block2 svt(const Block2& B, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidArgument("svt threshold must be >= 0");
  if (threshold == 0.0) return B;
  const SVD2 s = svd2x2(B);
  const double a = std::max(0.0, s.sigma(0) - threshold);
  const double b = std::max(0.0, s.sigma(1) - threshold);
  Block2 out = Block2::Zero();
  if (a > 0.0) out += a * s.U.col(0) * s.V.col(0).adjoint();
  if (b > 0.0) out += b * s.U.col(1) * s.V.col(1).adjoint();
  return out;
}

void write_blocks_csv(std::ostream& os, const BlockLifted& M) {
  os << "i,c,re_t,im_t\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < M.size(); ++i)
    os << i << ',' << M.c(i) << ',' << M.t(i).real() << ',' << M.t(i).imag()
       << '\n';
}

}  // namespace copr
