#include "sepvar/synth.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sepvar {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Beer ? "beer" : "exp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "beer") return ModelKind::Beer;
  if (name == "exp") return ModelKind::Exponential;
  throw InvalidInput("unknown model kind '" + std::string(name) + "'; expected beer or exp");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream ids; per-dataset streams add the dataset index.
constexpr std::uint64_t kStreamSounding = 1000;
constexpr std::uint64_t kStreamNoise = 2000;
constexpr std::uint64_t kStreamSizes = 3000;
constexpr std::uint64_t kStreamSolar = 4000;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

void add_noise(Vector& y, const Vector& clean, double snr, std::uint64_t seed) {
  y = clean;
  if (std::isinf(snr)) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < y.size(); ++i) y[i] = clean[i] * (1.0 + gauss(rng) / snr);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

Vector make_grid(const GridSpec& spec) {
  if (spec.length < 1) throw InvalidInput("grid needs at least one point");
  if (spec.length == 1) return Vector::Constant(1, spec.t_min);
  if (!(spec.t_max > spec.t_min)) throw InvalidInput("grid needs t_max > t_min");
  return Vector::LinSpaced(spec.length, spec.t_min, spec.t_max);
}

void TruthSpec::validate() const {
  const Index count = s();
  if (count < 1) throw InvalidInput("truth spec has no datasets");
  if (static_cast<Index>(beta_true.size()) != count) {
    throw InvalidInput("need one beta_true per dataset");
  }
  for (const auto& b : beta_true) {
    if (b.size() != n() || n() < 1) throw InvalidInput("beta_true vectors differ in length");
  }
  if (p() < 1 || !alpha_true.allFinite()) throw InvalidInput("alpha_true must be non-empty and finite");
  if (!(snr > 0.0)) throw InvalidInput("snr must be positive (or infinite)");
  for (const auto& g : grids) {
    if (g.length < 1) throw InvalidInput("grid length must be positive");
  }
  if (kind == ModelKind::Exponential && n() != p()) {
    throw InvalidInput("exponential model needs as many linear as nonlinear parameters");
  }
  if (kind == ModelKind::Beer) {
    if (static_cast<Index>(band.size()) != count || static_cast<Index>(mu_sun.size()) != count) {
      throw InvalidInput("Beer truth needs band and mu_sun for every dataset");
    }
    for (double mu : mu_sun) {
      if (!(mu > 0.0 && mu <= 1.0)) throw InvalidInput("mu_sun outside (0, 1]");
    }
    if (!(half_width >= 0.0)) throw InvalidInput("negative half width");
  }
}

Matrix tau_from_lines(const Vector& grid, const std::vector<std::vector<LineSpec>>& species) {
  Matrix tau = Matrix::Zero(grid.size(), static_cast<Index>(species.size()));
  const double ln2 = std::log(2.0);
  for (std::size_t l = 0; l < species.size(); ++l) {
    for (const LineSpec& line : species[l]) {
      const auto u = (grid.array() - line.center) / line.half_width;
      tau.col(static_cast<Index>(l)).array() += line.strength * (-ln2 * u.square()).exp();
    }
  }
  return tau;
}

Matrix gen_tau_profiles(const Vector& grid, Index p, std::uint64_t seed) {
  if (grid.size() < 1 || p < 1) throw InvalidInput("gen_tau_profiles: empty grid or no species");
  const double lo = grid.minCoeff();
  const double hi = grid.maxCoeff();

  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<std::vector<LineSpec>> species(static_cast<std::size_t>(p));
    for (Index l = 0; l < p; ++l) {
      // Each further species is weaker, as water lines are next to CO2.
      const double scale = std::pow(0.6, static_cast<double>(l));
      const int count = std::uniform_int_distribution<int>(5, 20)(rng);
      for (int i = 0; i < count; ++i) {
        LineSpec line;
        line.center = uniform(rng, lo, hi);
        line.half_width = uniform(rng, 0.08, 0.25);
        line.strength = scale * log_uniform(rng, 0.05, 1.0);
        species[static_cast<std::size_t>(l)].push_back(line);
      }
    }
    Matrix tau = tau_from_lines(grid, species);
    const Vector sv = Eigen::JacobiSVD<Matrix>(tau).singularValues();
    if (sv.size() == p && sv[p - 1] > 1e-6 * sv[0]) return tau;
  }
  throw GenerationError("optical-depth profiles stayed degenerate after " +
                        std::to_string(kAttempts) + " reseeds");
}

Vector gen_solar_spectrum(const Vector& grid, double level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double lo = grid.minCoeff();
  const double hi = grid.maxCoeff();
  const double mid = 0.5 * (lo + hi);
  const double span = hi > lo ? 0.5 * (hi - lo) : 1.0;
  const double slope = uniform(rng, -0.03, 0.03);
  Vector i0 = (level * (1.0 + slope * (grid.array() - mid) / span)).matrix();

  const int dips = std::uniform_int_distribution<int>(3, 6)(rng);
  const double ln2 = std::log(2.0);
  for (int i = 0; i < dips; ++i) {
    const double center = uniform(rng, lo, hi);
    const double width = uniform(rng, 0.05, 0.15);
    const double depth = uniform(rng, 0.05, 0.3);
    const auto u = (grid.array() - center) / width;
    i0.array() *= 1.0 - depth * (-ln2 * u.square()).exp();
  }
  return i0;
}

SyntheticProblem gen_spectra(const TruthSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Beer) throw InvalidInput("gen_spectra needs a Beer truth spec");

  auto model = std::make_shared<BeerModel>(spec.n(), spec.p());
  SyntheticProblem out;
  out.truth = spec;
  out.problem.model = model;

  for (Index k = 0; k < spec.s(); ++k) {
    const auto ku = static_cast<std::uint64_t>(k);
    const auto band = static_cast<std::uint64_t>(spec.band[static_cast<std::size_t>(k)]);
    const double mu = spec.mu_sun[static_cast<std::size_t>(k)];

    Dataset d;
    d.id = "dataset_" + std::to_string(k);
    d.t = make_grid(spec.grids[static_cast<std::size_t>(k)]);

    BeerAux aux;
    aux.mu_sun = mu;
    aux.half_width = spec.half_width;
    aux.i0 = gen_solar_spectrum(d.t, 1.0 + 0.5 * static_cast<double>(band),
                                stream_seed(spec.spectroscopy_seed, kStreamSolar + band));
    aux.tau = gen_tau_profiles(d.t, spec.p(), stream_seed(spec.spectroscopy_seed, band)) *
              (1.0 + 1.0 / mu);
    d.aux = std::move(aux);
    d.y = Vector::Zero(d.t.size());

    const Vector clean = model->eval(spec.alpha_true, d).phi * spec.beta_true[static_cast<std::size_t>(k)];
    add_noise(d.y, clean, spec.snr, stream_seed(spec.seed, kStreamNoise + ku));
    out.clean.push_back(clean);
    out.problem.datasets.push_back(std::move(d));
  }
  return out;
}

SyntheticProblem gen_exp_problem(const TruthSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Exponential) {
    throw InvalidInput("gen_exp_problem needs an exponential truth spec");
  }
  auto model = std::make_shared<ExponentialModel>(spec.p());
  SyntheticProblem out;
  out.truth = spec;
  out.problem.model = model;

  for (Index k = 0; k < spec.s(); ++k) {
    Dataset d;
    d.id = "dataset_" + std::to_string(k);
    d.t = make_grid(spec.grids[static_cast<std::size_t>(k)]);
    d.y = Vector::Zero(d.t.size());
    const Vector clean = eval_exp_basis(spec.alpha_true, d).phi * spec.beta_true[static_cast<std::size_t>(k)];
    add_noise(d.y, clean, spec.snr,
              stream_seed(spec.seed, kStreamNoise + static_cast<std::uint64_t>(k)));
    out.clean.push_back(clean);
    out.problem.datasets.push_back(std::move(d));
  }
  return out;
}

SyntheticProblem generate(const TruthSpec& spec) {
  return spec.kind == ModelKind::Beer ? gen_spectra(spec) : gen_exp_problem(spec);
}

Vector default_beer_alpha() { return (Vector(2) << 1.05, 0.92).finished(); }

TruthSpec frame_truth(Index datasets, double snr, std::uint64_t seed, const Vector& alpha_true) {
  if (datasets < 1) throw InvalidInput("frame needs at least one dataset");
  TruthSpec spec;
  spec.kind = ModelKind::Beer;
  spec.alpha_true = alpha_true;
  spec.snr = snr;
  spec.seed = seed;

  // Strong band (index 0) and weak band (index 1).
  const GridSpec band_grid[2] = {{809, 6210.0, 6290.0}, {651, 4960.0, 5025.0}};

  double mu = 1.0;
  Vector reflectivity;
  for (Index k = 0; k < datasets; ++k) {
    const Index sounding = k / 2;
    const int band = static_cast<int>(k % 2);
    if (band == 0) {
      std::mt19937_64 rng(stream_seed(seed, kStreamSounding + static_cast<std::uint64_t>(sounding)));
      mu = uniform(rng, 0.5, 0.95);
      reflectivity = Vector(6);
      for (int b = 0; b < 2; ++b) {
        reflectivity[3 * b + 0] = uniform(rng, 0.15, 0.45);
        reflectivity[3 * b + 1] = uniform(rng, -0.05, 0.05);
        reflectivity[3 * b + 2] = uniform(rng, -0.02, 0.02);
      }
    }
    spec.grids.push_back(band_grid[band]);
    spec.band.push_back(band);
    spec.mu_sun.push_back(mu);
    spec.beta_true.push_back(reflectivity.segment(3 * band, 3));
  }
  return spec;
}

TruthSpec exp_truth(Index s, const Vector& alpha_true, double snr, std::uint64_t seed) {
  if (s < 1) throw InvalidInput("need at least one dataset");
  TruthSpec spec;
  spec.kind = ModelKind::Exponential;
  spec.alpha_true = alpha_true;
  spec.snr = snr;
  spec.seed = seed;

  std::vector<Index> sizes(21);
  std::iota(sizes.begin(), sizes.end(), Index{10});
  std::mt19937_64 size_rng(stream_seed(seed, kStreamSizes));
  std::shuffle(sizes.begin(), sizes.end(), size_rng);

  for (Index k = 0; k < s; ++k) {
    std::mt19937_64 rng(stream_seed(seed, kStreamSounding + static_cast<std::uint64_t>(k)));
    GridSpec grid;
    grid.length = sizes[static_cast<std::size_t>(k % 21)];
    grid.t_min = 0.0;
    grid.t_max = uniform(rng, 4.0, 8.0);
    Vector beta(alpha_true.size());
    for (Index j = 0; j < beta.size(); ++j) beta[j] = uniform(rng, 0.5, 2.0);
    spec.grids.push_back(grid);
    spec.beta_true.push_back(beta);
  }
  return spec;
}

}  // namespace sepvar
