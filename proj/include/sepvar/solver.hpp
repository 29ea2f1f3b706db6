#pragma once

#include "sepvar/lm.hpp"
#include "sepvar/stats.hpp"
#include "sepvar/vpcore.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace sepvar {

enum class Method { VpGolubLeVeque, VpKaufman, VpNaive, NlsFull };

/// "vp-gl", "vp-km", "vp-naive", "nls-full".
std::string_view to_string(Method method);
/// Inverse of to_string; throws InvalidInput for unknown names.
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::VpGolubLeVeque, Method::VpKaufman,
                                         Method::VpNaive, Method::NlsFull};

/// Starting values of the linear parameters for the joint solver.
enum class BetaStart { LinearSolve, Zero };

struct SolverConfig {
  Method method = Method::VpGolubLeVeque;
  LMConfig lm;
  BetaStart beta0 = BetaStart::LinearSolve;
  NaiveOptions naive;
  bool diagnostics = true;
};

struct FitResult {
  Method method = Method::VpGolubLeVeque;
  Vector alpha_hat;
  std::vector<Vector> beta_hat;   ///< one vector of length n per dataset
  std::vector<Vector> residuals;  ///< y_k - Phi_k(alpha_hat) beta_k
  LMReport lm_report;
  double wall_time = 0.0;         ///< seconds, model evaluations included
  std::optional<Diagnostics> diagnostics;

  /// 0.5 * sum_k |residual_k|^2
  double final_cost() const;
  Vector stacked_residual() const;
};

/// Fits the multi-dataset separable problem. VP methods minimize the reduced
/// functional over alpha and then recover beta_k = Phi_k^+(alpha_hat) y_k;
/// NLS-FULL iterates on (alpha, beta_1, ..., beta_s) jointly. Errors carry
/// the method name and, when known, the dataset index.
FitResult fit(const MultiProblem& problem, const SolverConfig& cfg, const Vector& alpha0);

/// Stacked eta_k(x) - y_k for the joint vector x = (alpha, beta_1, ..., beta_s).
/// Model minus data, so that its Jacobian is the model Jacobian.
Vector nls_full_residual(const Vector& x, const MultiProblem& problem);

/// M x (p + s n) Jacobian of nls_full_residual. Rows of dataset k hold
/// (dPhi_k/dalpha_l) beta_k in column l and Phi_k in the columns of beta_k;
/// the columns of every other beta_j are zero there.
Matrix nls_full_jacobian(const Vector& x, const MultiProblem& problem);

/// beta_k0 = Phi_k^+(alpha0) y_k for every dataset.
std::vector<Vector> initial_beta(const MultiProblem& problem, const Vector& alpha0);

/// (alpha, beta_1, ..., beta_s) packed into one vector.
Vector pack_joint(const Vector& alpha, const std::vector<Vector>& betas);

}  // namespace sepvar
