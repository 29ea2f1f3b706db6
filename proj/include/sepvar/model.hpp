#pragma once

#include "sepvar/common.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sepvar {

/// Auxiliary inputs of the Beer-law absorption model for one spectrum.
struct BeerAux {
  double mu_sun = 1.0;     ///< cosine of the solar zenith angle, in (0, 1]
  Vector i0;               ///< top-of-atmosphere solar spectrum, one sample per grid point
  Matrix tau;              ///< optical-depth profiles, m x p (one column per species)
  double half_width = 0.0; ///< instrument response half width at half maximum, in units of t
};

/// One right-hand side: abscissa grid, observations and model-specific inputs.
struct Dataset {
  Vector t;
  Vector y;
  std::variant<std::monostate, BeerAux> aux;
  std::string id;

  Index size() const { return t.size(); }
  const BeerAux* beer() const { return std::get_if<BeerAux>(&aux); }
};

/// Basis matrix of one dataset together with its partial derivatives.
/// dphi[l] holds d(phi)/d(alpha_l); every matrix is m x n.
struct BasisEval {
  Matrix phi;
  std::vector<Matrix> dphi;
};

/// Checks the dataset invariants (matching lengths, strictly increasing grid,
/// sane Beer inputs when present). Throws InvalidInput.
void validate_dataset(const Dataset& d);

/// Interface of a separable model eta = Phi(alpha) * beta. Implementations
/// must be reentrant: eval holds no mutable state.
class SeparableModel {
 public:
  virtual ~SeparableModel() = default;

  virtual Index n() const = 0;  ///< linear parameters per dataset
  virtual Index p() const = 0;  ///< shared nonlinear parameters
  virtual std::string_view kind() const = 0;
  virtual BasisEval eval(const Vector& alpha, const Dataset& dataset) const = 0;
};

/// phi(i, j) = exp(-alpha_j * t_i). One linear and one nonlinear parameter per term.
BasisEval eval_exp_basis(const Vector& alpha, const Dataset& dataset);

/// Beer-law radiance basis with n reflectivity polynomial terms:
///   phi_j = [x^j * mu_sun * I0 * exp(-sum_l alpha_l tau_l)] (*) S
/// where x is the abscissa mapped onto [-1, 1] and S a normalized Gaussian
/// instrument response. The derivative columns are convolved the same way.
BasisEval eval_beer_basis(const Vector& alpha, const Dataset& dataset, Index n);

/// Affine map of a strictly increasing grid onto [-1, 1].
Vector normalize_abscissa(const Vector& t);

/// Discrete Gaussian kernel (half width at half maximum `half_width`, support
/// +-4 half widths) sampled at `spacing` and normalized to unit sum. A
/// non-positive half width, or one below the sample spacing/4, gives a delta.
Vector instrument_kernel(double half_width, double spacing);

/// Same-length convolution of every column of `x` with a symmetric odd-length
/// kernel; out-of-range samples are mirrored about the end points
/// (d c b | a b c d | c b a).
Matrix convolve_reflect(const Matrix& x, const Vector& kernel);

class ExponentialModel final : public SeparableModel {
 public:
  explicit ExponentialModel(Index terms);

  Index n() const override { return terms_; }
  Index p() const override { return terms_; }
  std::string_view kind() const override { return "exp"; }
  BasisEval eval(const Vector& alpha, const Dataset& dataset) const override;

 private:
  Index terms_;
};

class BeerModel final : public SeparableModel {
 public:
  BeerModel(Index poly_terms, Index species);

  Index n() const override { return poly_terms_; }
  Index p() const override { return species_; }
  std::string_view kind() const override { return "beer"; }
  BasisEval eval(const Vector& alpha, const Dataset& dataset) const override;

 private:
  Index poly_terms_;
  Index species_;
};

}  // namespace sepvar
