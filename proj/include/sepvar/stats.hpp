#pragma once

#include "sepvar/common.hpp"

namespace sepvar {

struct FitResult;
struct MultiProblem;

/// Post-fit statistics over the joint parameter vector (alpha, beta_1, ..., beta_s).
struct Diagnostics {
  double sigma = 0.0;
  double r_score = 0.0;
  Matrix covariance;   ///< (p + s n) square
  Vector conf_bounds;  ///< 95% half widths, same ordering as covariance
  Index dof = 0;       ///< M - s n - p
  bool rank_warning = false;  ///< H^T H was singular; covariance is a pseudo-inverse
};

/// |r| / sqrt(M - s n - p). Throws InvalidInput when the degrees of freedom
/// are not positive or the residual length differs from m_total.
double sigma_of_regression(const Vector& residual, Index m_total, Index n, Index s, Index p);

/// sum (yhat_i - ybar)^2 / sum (y_i - ybar)^2 with ybar the mean of y.
/// This is the regression-sum ratio, not 1 - SSE/SST.
double r_score(const Vector& y_all, const Vector& yhat_all);

/// H = [dz/dalpha | G] at the fitted alpha. The first block is always the
/// exact (Golub-LeVeque) projected-residual Jacobian, whatever method fitted.
Matrix build_H(const FitResult& result, const MultiProblem& problem);

/// sigma^2 (H^T H)^{-1}, through a pivoted QR of H. When H is column rank
/// deficient the pseudo-inverse is used and *rank_warning is set.
Matrix covariance(const Matrix& H, double sigma, bool* rank_warning = nullptr);

/// Two-sided standard normal quantile for the given confidence level,
/// e.g. 1.959963984540054 for 0.95.
double normal_quantile(double level);

/// q * sqrt(diag C).
Vector confidence_bounds(const Matrix& C, double level = 0.95);

/// (truth - fit) / truth, componentwise.
Vector relative_error(const Vector& alpha_true, const Vector& alpha_fit);

/// All of the above for a converged fit.
Diagnostics diagnose(const FitResult& result, const MultiProblem& problem, double level = 0.95);

}  // namespace sepvar
