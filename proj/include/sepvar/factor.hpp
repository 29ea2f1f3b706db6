#pragma once

#include "sepvar/common.hpp"

#include <Eigen/QR>

namespace sepvar {

/// Thin QR factorization with column pivoting, Phi * P = Q1 * R1.
///
/// The Householder reflectors are kept so that the trailing block Q2 of the
/// full orthogonal factor is only ever applied, never formed.
struct QRFactors {
  Eigen::ColPivHouseholderQR<Matrix> qr;
  Matrix q1;                ///< m x n, orthonormal columns
  Matrix r1;                ///< n x n upper triangular, |diagonal| non-increasing
  Eigen::VectorXi perm;     ///< Phi.col(perm[i]) is the i-th pivoted column
  Index rank = 0;
  double rank_tol = 0.0;

  Index rows() const { return q1.rows(); }
  Index cols() const { return q1.cols(); }
  bool full_rank() const { return rank == cols(); }
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Factorizes Phi (m >= n >= 1). Throws InvalidInput for m < n and
/// RankDeficient (carrying the detected rank) when fewer than n pivots
/// exceed rank_tol * |r1(0,0)|.
QRFactors thin_qr(const Matrix& phi, double rank_tol = kDefaultRankTol);

/// Same factorization without the full-rank requirement.
QRFactors thin_qr_any_rank(const Matrix& phi, double rank_tol = kDefaultRankTol);

/// beta = Phi^+ y = P R1^{-1} Q1^T y, the least-squares solution.
Vector pinv_apply(const QRFactors& f, const Vector& y);

/// (Phi^+)^T v = Q1 R1^{-T} P^T v for v of length n; returns length m.
Vector pinv_transpose_apply(const QRFactors& f, const Vector& v);

/// Orthogonal complement projection y - Q1 (Q1^T y).
Vector proj_perp_apply(const QRFactors& f, const Vector& y);

/// Q2^T y (length m - n) from the stored reflectors; empty when m == n.
Vector q2t_apply(const QRFactors& f, const Vector& y);

}  // namespace sepvar
