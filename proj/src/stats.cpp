#include "sepvar/stats.hpp"

#include "sepvar/solver.hpp"

#include <boost/math/distributions/normal.hpp>

#include <Eigen/SVD>

#include <cmath>

namespace sepvar {

double sigma_of_regression(const Vector& residual, Index m_total, Index n, Index s, Index p) {
  if (residual.size() != m_total) {
    throw InvalidInput("residual length " + std::to_string(residual.size()) +
                       " differs from M = " + std::to_string(m_total));
  }
  const Index dof = m_total - s * n - p;
  if (dof <= 0) {
    throw InvalidInput("no degrees of freedom left: M - s n - p = " + std::to_string(dof));
  }
  return residual.norm() / std::sqrt(static_cast<double>(dof));
}

double r_score(const Vector& y_all, const Vector& yhat_all) {
  if (y_all.size() != yhat_all.size() || y_all.size() == 0) {
    throw InvalidInput("r_score: observation and prediction lengths differ or are empty");
  }
  const double mean = y_all.mean();
  const double total = (y_all.array() - mean).square().sum();
  if (!(total > 0.0)) throw InvalidInput("r_score: observations are constant");
  return (yhat_all.array() - mean).square().sum() / total;
}

Matrix build_H(const FitResult& result, const MultiProblem& problem) {
  const ReducedEval at_fit = eval_gl(result.alpha_hat, problem);
  std::vector<Matrix> blocks;
  blocks.reserve(at_fit.per_dataset.size());
  for (const auto& cache : at_fit.per_dataset) blocks.push_back(cache.basis.phi);
  const Matrix g = block_diagonal(blocks);

  Matrix h(problem.total_rows(), problem.p() + g.cols());
  h.leftCols(problem.p()) = at_fit.jac;
  h.rightCols(g.cols()) = g;
  return h;
}

Matrix covariance(const Matrix& H, double sigma, bool* rank_warning) {
  if (!H.allFinite() || !std::isfinite(sigma)) throw InvalidInput("covariance: non-finite input");
  const Index cols = H.cols();
  const double scale = sigma * sigma;
  if (rank_warning) *rank_warning = false;
  if (cols == 0) return Matrix(0, 0);

  Eigen::ColPivHouseholderQR<Matrix> qr(H);
  if (H.rows() >= cols && qr.rank() == cols) {
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(cols, cols));
    const Matrix inner = r_inv * r_inv.transpose();
    const Eigen::VectorXi perm = qr.colsPermutation().indices();
    Matrix c(cols, cols);
    for (Index i = 0; i < cols; ++i) {
      for (Index j = 0; j < cols; ++j) c(perm[i], perm[j]) = inner(i, j);
    }
    return scale * 0.5 * (c + c.transpose());
  }

  if (rank_warning) *rank_warning = true;
  Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? sv[0] * 1e-12 * static_cast<double>(cols) : 0.0;
  Vector inv_sq = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) inv_sq[i] = 1.0 / (sv[i] * sv[i]);
  }
  const Matrix& v = svd.matrixV();
  return scale * (v * inv_sq.asDiagonal() * v.transpose());
}

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

Vector confidence_bounds(const Matrix& C, double level) {
  if (!C.allFinite()) throw InvalidInput("confidence_bounds: non-finite covariance");
  const double q = normal_quantile(level);
  return (q * C.diagonal().array().max(0.0).sqrt()).matrix();
}

Vector relative_error(const Vector& alpha_true, const Vector& alpha_fit) {
  if (alpha_true.size() != alpha_fit.size()) throw InvalidInput("relative_error: length mismatch");
  if ((alpha_true.array() == 0.0).any()) throw InvalidInput("relative_error: zero true value");
  return ((alpha_true - alpha_fit).array() / alpha_true.array()).matrix();
}

Diagnostics diagnose(const FitResult& result, const MultiProblem& problem, double level) {
  Diagnostics d;
  const Vector r = result.stacked_residual();
  const Vector y = problem.stacked_y();
  const Index m_total = problem.total_rows();
  d.dof = m_total - problem.s() * problem.n() - problem.p();
  d.sigma = sigma_of_regression(r, m_total, problem.n(), problem.s(), problem.p());
  d.r_score = r_score(y, y - r);
  d.covariance = covariance(build_H(result, problem), d.sigma, &d.rank_warning);
  d.conf_bounds = confidence_bounds(d.covariance, level);
  return d;
}

}  // namespace sepvar
