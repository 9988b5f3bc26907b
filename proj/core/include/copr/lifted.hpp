#pragma once

#include <iosfwd>
#include <vector>

#include "copr/forward_model.hpp"
#include "copr/types.hpp"

namespace copr {

using Block2 = Eigen::Matrix2cd;

/// A 2n_y x 2n_y matrix that is block diagonal (after a symmetric
/// permutation) with n_y general 2x2 complex blocks. Used for the ADMM
/// primal and dual variables.
using BlockMatrix = std::vector<Block2>;

/// M(U, a, b, y) in permuted form: block i is [[c_i, t_i], [l_i, 1]] with
///   c_i = y_i + 2 Re(conj(alpha_i) beta_i) + |beta_i|^2,
///   t_i = conj(alpha_i + beta_i),  l_i = alpha_i + beta_i,
/// where alpha = U a and beta = U b. The bottom-right entry is always 1.
struct BlockLifted {
  RVec c;
  CVec t;
  CVec l;

  Eigen::Index size() const { return c.size(); }
  Block2 block(Eigen::Index i) const;
  BlockMatrix to_blocks() const;
};

BlockLifted build_M(const PropagationMatrix& U, const CVec& a, const CVec& b,
                    const RVec& y);

/// Same as build_M with the image-plane fields alpha = U a, beta = U b
/// already computed.
BlockLifted build_M_from_fields(const CVec& alpha, const CVec& beta,
                                const RVec& y);

/// |det(block_i)| = |c_i - t_i l_i|; equals |y_i - |(Ua)_i|^2| for any b.
RVec rank_residuals(const BlockLifted& M);

/// Nuclear norm of one 2x2 block: sqrt(||B||_F^2 + 2 |det B|).
double block_nuclear_norm(const Block2& B);

double nuclear_norm(const BlockLifted& M);
double nuclear_norm(const BlockMatrix& M);

/// Squared Frobenius distance between two block matrices of equal shape.
double frobenius_distance(const BlockMatrix& A, const BlockMatrix& B);
double frobenius_distance(const BlockMatrix& A, const BlockLifted& B);

struct SVD2 {
  Block2 U;
  Eigen::Vector2d sigma;  // sigma(0) >= sigma(1) >= 0
  Block2 V;

  Block2 reconstruct() const;
};

/// Closed-form SVD of a 2x2 complex matrix.
///
/// Singular values come from the Frobenius norm and |det|; the right
/// singular vectors from the Hermitian Gram matrix. The first row of V^H is
/// scaled so its largest-magnitude entry is real and positive; a zero block
/// returns identity factors.
SVD2 svd2x2(const Block2& B);

/// U max(Sigma - threshold, 0) V^H.
Block2 svt(const Block2& B, double threshold);

void write_blocks_csv(std::ostream& os, const BlockLifted& M);

}  // namespace copr
