#pragma once

#include "sepvar/factor.hpp"
#include "sepvar/model.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace sepvar {

/// s datasets sharing one nonlinear parameter vector; each dataset owns n
/// linear parameters and may have its own length and auxiliary inputs.
struct MultiProblem {
  std::vector<Dataset> datasets;
  std::shared_ptr<const SeparableModel> model;

  Index s() const { return static_cast<Index>(datasets.size()); }
  Index n() const { return model->n(); }
  Index p() const { return model->p(); }
  Index total_rows() const;
  Vector stacked_y() const;

  /// Row offset of dataset k inside stacked vectors.
  Index offset(Index k) const;

  /// Throws InvalidInput unless s >= 1, every m_k > n, sum(m_k - n) >= p and
  /// every dataset is valid.
  void validate() const;
};

/// Per-dataset quantities computed at one alpha and shared between the
/// residual and its Jacobian.
struct DatasetCache {
  BasisEval basis;
  std::optional<QRFactors> qr;  ///< absent for the block-diagonal formulation
  Vector beta;                  ///< Phi_k^+ y_k
  Vector residual;              ///< y_k - Phi_k beta_k
};

struct ReducedEval {
  Vector z;
  Matrix jac;
  std::vector<DatasetCache> per_dataset;
};

struct NaiveOptions {
  double element_budget = 1e8;  ///< refuse a block-diagonal matrix with more entries
};

/// Stacked projected residuals (P_k^perp y_k) with the exact Jacobian of
/// the projector. length(z) = sum m_k.
ReducedEval eval_gl(const Vector& alpha, const MultiProblem& problem);

/// Stacked Q2_k^T y_k with Kaufman's simplified Jacobian -Q2_k^T dPhi_k beta_k.
/// length(z) = sum m_k - s n.
ReducedEval eval_km(const Vector& alpha, const MultiProblem& problem);

/// Single-RHS projection applied to the explicit dense block-diagonal matrix
/// G(alpha) = diag(Phi_1, ..., Phi_s). length(z) = sum m_k.
ReducedEval eval_naive(const Vector& alpha, const MultiProblem& problem,
                       const NaiveOptions& options = {});

/// Dense G(alpha) with Phi_k on the diagonal, M x (s n).
Matrix block_diagonal(const std::vector<Matrix>& blocks);

}  // namespace sepvar
