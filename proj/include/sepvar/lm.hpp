#pragma once

#include "sepvar/common.hpp"

#include <functional>
#include <string_view>
#include <vector>

namespace sepvar {

struct LMConfig {
  int max_iter = 200;
  double ftol = 1e-10;  ///< relative decrease of the cost on an accepted step
  double xtol = 1e-10;  ///< step norm relative to xtol + |x|
  double gtol = 1e-10;  ///< infinity norm of J^T r
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.3;
  bool record_iterates = false;

  void validate() const;
};

enum class LMStatus { ConvergedFtol, ConvergedXtol, ConvergedGtol, MaxIter, FailedLinearSolve };

std::string_view to_string(LMStatus status);

struct LMReport {
  Vector x_final;
  std::vector<double> cost_history;  ///< 0.5 |r|^2 at x0 and after every accepted step
  std::vector<Vector> iterates;      ///< accepted iterates, when requested
  int n_iter = 0;
  int n_feval = 0;
  LMStatus status = LMStatus::MaxIter;

  bool converged() const {
    return status == LMStatus::ConvergedFtol || status == LMStatus::ConvergedXtol ||
           status == LMStatus::ConvergedGtol;
  }
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Levenberg-Marquardt with Marquardt scaling diag(J^T J). Each damped step
/// solves min |[J; sqrt(lambda) D] dx + [r; 0]| by orthogonal factorization.
///
/// jacobian_fn is only called at points where residual_fn was called last,
/// so callers may cache shared work between the two.
///
/// A trial point whose residual is non-finite or overflows is treated as a
/// rejected step. Non-finite values at x0 or at an accepted point throw
/// EvaluationFailed carrying the iterate.
LMReport lm_solve(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn, const Vector& x0,
                  const LMConfig& cfg = {});

}  // namespace sepvar
