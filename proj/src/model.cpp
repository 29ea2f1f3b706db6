#include "sepvar/model.hpp"

#include <cmath>
#include <limits>

namespace sepvar {

namespace {

void require_finite(const Vector& alpha) {
  if (!alpha.allFinite()) throw InvalidInput("nonlinear parameters must be finite");
}

// Mirror index without repeating the edge sample (period 2(m-1)).
Index reflect_index(Index i, Index m) {
  if (m == 1) return 0;
  const Index period = 2 * (m - 1);
  i %= period;
  if (i < 0) i += period;
  return i < m ? i : period - i;
}

double mean_spacing(const Vector& t) {
  const Index m = t.size();
  return m > 1 ? (t[m - 1] - t[0]) / static_cast<double>(m - 1) : 1.0;
}

}  // namespace

void validate_dataset(const Dataset& d) {
  const Index m = d.t.size();
  if (m < 1) throw InvalidInput("dataset '" + d.id + "' is empty");
  if (d.y.size() != m) throw InvalidInput("dataset '" + d.id + "': t and y differ in length");
  for (Index i = 1; i < m; ++i) {
    if (!(d.t[i] > d.t[i - 1])) {
      throw InvalidInput("dataset '" + d.id + "': abscissa not strictly increasing");
    }
  }
  if (!d.y.allFinite()) throw InvalidInput("dataset '" + d.id + "': non-finite observation");
  if (const BeerAux* aux = d.beer()) {
    if (!(aux->mu_sun > 0.0 && aux->mu_sun <= 1.0)) {
      throw InvalidInput("dataset '" + d.id + "': mu_sun outside (0, 1]");
    }
    if (aux->i0.size() != m) throw InvalidInput("dataset '" + d.id + "': I0 length mismatch");
    if ((aux->i0.array() <= 0.0).any()) {
      throw InvalidInput("dataset '" + d.id + "': I0 must be positive");
    }
    if (aux->tau.rows() != m) throw InvalidInput("dataset '" + d.id + "': tau row mismatch");
    if (!aux->tau.allFinite() || (aux->tau.array() < 0.0).any()) {
      throw InvalidInput("dataset '" + d.id + "': tau must be finite and non-negative");
    }
    if (!(aux->half_width >= 0.0)) {
      throw InvalidInput("dataset '" + d.id + "': negative half width");
    }
  }
}

BasisEval eval_exp_basis(const Vector& alpha, const Dataset& dataset) {
  require_finite(alpha);
  const Index m = dataset.t.size();
  const Index p = alpha.size();

  BasisEval out;
  out.phi.resize(m, p);
  for (Index j = 0; j < p; ++j) {
    out.phi.col(j) = (-alpha[j] * dataset.t.array()).exp().matrix();
  }
  out.dphi.assign(static_cast<std::size_t>(p), Matrix::Zero(m, p));
  for (Index l = 0; l < p; ++l) {
    out.dphi[l].col(l) = -(dataset.t.array() * out.phi.col(l).array()).matrix();
  }
  return out;
}

Vector normalize_abscissa(const Vector& t) {
  const Index m = t.size();
  if (m < 1) throw InvalidInput("empty abscissa");
  for (Index i = 1; i < m; ++i) {
    if (!(t[i] > t[i - 1])) throw InvalidInput("abscissa not strictly increasing");
  }
  const double lo = t[0];
  const double hi = t[m - 1];
  if (!(hi > lo)) throw InvalidInput("constant abscissa cannot be normalized");
  return ((t.array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
}

Vector instrument_kernel(double half_width, double spacing) {
  if (!(half_width > 0.0) || !(spacing > 0.0)) return Vector::Ones(1);
  const auto half_len = static_cast<Index>(std::floor(4.0 * half_width / spacing + 1e-9));
  if (half_len == 0) return Vector::Ones(1);

  // exp(-ln2 (x/hwhm)^2) is the Gaussian with the given half width at half maximum.
  Vector k(2 * half_len + 1);
  for (Index j = -half_len; j <= half_len; ++j) {
    const double u = static_cast<double>(j) * spacing / half_width;
    k[j + half_len] = std::exp(-std::log(2.0) * u * u);
  }
  return k / k.sum();
}

Matrix convolve_reflect(const Matrix& x, const Vector& kernel) {
  const Index m = x.rows();
  const Index half_len = kernel.size() / 2;
  if (half_len == 0) return x * kernel[0];

  Matrix out = Matrix::Zero(m, x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    const double* col = x.col(c).data();
    for (Index i = 0; i < m; ++i) {
      double acc = 0.0;
      if (i >= half_len && i + half_len < m) {
        const double* base = col + (i - half_len);
        for (Index j = 0; j < kernel.size(); ++j) acc += kernel[j] * base[j];
      } else {
        for (Index j = -half_len; j <= half_len; ++j) {
          acc += kernel[j + half_len] * col[reflect_index(i + j, m)];
        }
      }
      out(i, c) = acc;
    }
  }
  return out;
}

BasisEval eval_beer_basis(const Vector& alpha, const Dataset& dataset, Index n) {
  const BeerAux* aux = dataset.beer();
  if (aux == nullptr) throw InvalidInput("dataset '" + dataset.id + "' has no Beer-model inputs");
  require_finite(alpha);
  const Index m = dataset.t.size();
  const Index p = alpha.size();
  if (aux->tau.rows() != m || aux->tau.cols() != p) {
    throw InvalidInput("tau must be " + std::to_string(m) + " x " + std::to_string(p));
  }
  if (aux->i0.size() != m) throw InvalidInput("I0 length mismatch");
  if ((aux->i0.array() <= 0.0).any()) throw InvalidInput("I0 must be positive");
  if (!(aux->mu_sun > 0.0 && aux->mu_sun <= 1.0)) throw InvalidInput("mu_sun outside (0, 1]");
  if (n < 1) throw InvalidInput("need at least one polynomial term");

  const Vector exponent = -(aux->tau * alpha);
  const double max_exponent = std::log(std::numeric_limits<double>::max());
  for (Index i = 0; i < m; ++i) {
    if (exponent[i] > max_exponent) throw Overflow(i);
  }
  const Vector radiance = (aux->mu_sun * aux->i0.array() * exponent.array().exp()).matrix();

  const Vector x = m > 1 ? normalize_abscissa(dataset.t) : Vector::Zero(1);
  Matrix mono(m, n);
  mono.col(0) = radiance;
  for (Index j = 1; j < n; ++j) mono.col(j) = (mono.col(j - 1).array() * x.array()).matrix();

  // All p derivative blocks are convolved in one pass with the basis itself.
  Matrix stacked(m, n * (p + 1));
  stacked.leftCols(n) = mono;
  for (Index l = 0; l < p; ++l) {
    stacked.middleCols(n * (l + 1), n) = (-aux->tau.col(l)).asDiagonal() * mono;
  }
  const Matrix conv =
      convolve_reflect(stacked, instrument_kernel(aux->half_width, mean_spacing(dataset.t)));

  BasisEval out;
  out.phi = conv.leftCols(n);
  out.dphi.reserve(static_cast<std::size_t>(p));
  for (Index l = 0; l < p; ++l) out.dphi.push_back(conv.middleCols(n * (l + 1), n));
  return out;
}

ExponentialModel::ExponentialModel(Index terms) : terms_(terms) {
  if (terms < 1) throw InvalidInput("exponential model needs at least one term");
}

BasisEval ExponentialModel::eval(const Vector& alpha, const Dataset& dataset) const {
  if (alpha.size() != terms_) {
    throw InvalidInput("expected " + std::to_string(terms_) + " nonlinear parameters, got " +
                       std::to_string(alpha.size()));
  }
  return eval_exp_basis(alpha, dataset);
}

BeerModel::BeerModel(Index poly_terms, Index species) : poly_terms_(poly_terms), species_(species) {
  if (poly_terms < 1 || species < 0) throw InvalidInput("invalid Beer model dimensions");
}

BasisEval BeerModel::eval(const Vector& alpha, const Dataset& dataset) const {
  if (alpha.size() != species_) {
    throw InvalidInput("expected " + std::to_string(species_) + " nonlinear parameters, got " +
                       std::to_string(alpha.size()));
  }
  return eval_beer_basis(alpha, dataset, poly_terms_);
}

}  // namespace sepvar
