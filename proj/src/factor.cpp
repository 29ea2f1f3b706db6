#include "sepvar/factor.hpp"

#include <cmath>

namespace sepvar {

QRFactors thin_qr_any_rank(const Matrix& phi, double rank_tol) {
  const Index m = phi.rows();
  const Index n = phi.cols();
  if (n < 1) throw InvalidInput("thin_qr: matrix has no columns");
  if (m < n) {
    throw InvalidInput("thin_qr: need rows >= cols, got " + std::to_string(m) + " x " +
                       std::to_string(n));
  }
  if (!phi.allFinite()) throw InvalidInput("thin_qr: non-finite entries");

  QRFactors f;
  f.rank_tol = rank_tol;
  f.qr.compute(phi);
  f.r1 = f.qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  f.perm = f.qr.colsPermutation().indices();
  f.q1 = f.qr.householderQ() * Matrix::Identity(m, n);

  const double lead = std::abs(f.r1(0, 0));
  f.rank = 0;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(f.r1(i, i)) > rank_tol * lead) ++f.rank;
  }
  return f;
}

QRFactors thin_qr(const Matrix& phi, double rank_tol) {
  QRFactors f = thin_qr_any_rank(phi, rank_tol);
  if (!f.full_rank()) throw RankDeficient(f.rank, f.cols());
  return f;
}

namespace {

void require_full_rank(const QRFactors& f) {
  if (!f.full_rank()) throw RankDeficient(f.rank, f.cols());
}

void require_rows(const QRFactors& f, const Vector& y) {
  if (y.size() != f.rows()) {
    throw InvalidInput("vector of length " + std::to_string(y.size()) + " does not match " +
                       std::to_string(f.rows()) + " rows");
  }
}

}  // namespace

Vector pinv_apply(const QRFactors& f, const Vector& y) {
  require_full_rank(f);
  require_rows(f, y);
  const Vector z = f.r1.triangularView<Eigen::Upper>().solve(f.q1.transpose() * y);
  Vector beta(f.cols());
  for (Index i = 0; i < f.cols(); ++i) beta[f.perm[i]] = z[i];
  return beta;
}

Vector pinv_transpose_apply(const QRFactors& f, const Vector& v) {
  require_full_rank(f);
  if (v.size() != f.cols()) throw InvalidInput("pinv_transpose_apply: length mismatch");
  Vector w(f.cols());
  for (Index i = 0; i < f.cols(); ++i) w[i] = v[f.perm[i]];
  f.r1.transpose().triangularView<Eigen::Lower>().solveInPlace(w);
  return f.q1 * w;
}

Vector proj_perp_apply(const QRFactors& f, const Vector& y) {
  require_rows(f, y);
  return y - f.q1 * (f.q1.transpose() * y);
}

Vector q2t_apply(const QRFactors& f, const Vector& y) {
  require_rows(f, y);
  const Index m = f.rows();
  const Index n = f.cols();
  if (m == n) return Vector(0);
  Vector qty = y;
  qty.applyOnTheLeft(f.qr.householderQ().transpose());
  return qty.tail(m - n);
}

}  // namespace sepvar
