#pragma once

#include "sepvar/vpcore.hpp"

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace sepvar {

enum class ModelKind { Exponential, Beer };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Identifier of the random number machinery, stored in bundle manifests.
/// Streams are bit-reproducible within one standard library implementation.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64/splitmix64-streams/std::normal_distribution";

/// Seed of an independent random stream derived from (base, stream).
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream);

/// Uniform grid of `length` points on [t_min, t_max].
struct GridSpec {
  Index length = 0;
  double t_min = 0.0;
  double t_max = 1.0;
};

Vector make_grid(const GridSpec& spec);

/// Everything needed to regenerate a synthetic problem.
struct TruthSpec {
  ModelKind kind = ModelKind::Exponential;
  Vector alpha_true;
  std::vector<Vector> beta_true;  ///< one per dataset
  std::vector<GridSpec> grids;    ///< one per dataset
  double snr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  // Beer model only. Datasets of one band share absorption lines and solar
  // spectrum; optical depths are scaled by the two-way air mass 1 + 1/mu_sun.
  std::vector<int> band;
  std::vector<double> mu_sun;
  double half_width = 0.15;
  std::uint64_t spectroscopy_seed = 2023;

  Index s() const { return static_cast<Index>(grids.size()); }
  Index n() const { return beta_true.empty() ? 0 : beta_true.front().size(); }
  Index p() const { return alpha_true.size(); }

  /// Throws InvalidInput on inconsistent lengths or snr <= 0.
  void validate() const;
};

/// A generated problem together with its truth and noiseless model values.
struct SyntheticProblem {
  MultiProblem problem;
  TruthSpec truth;
  std::vector<Vector> clean;
};

/// One Gaussian absorption line: peak optical depth `strength` at `center`.
struct LineSpec {
  double center = 0.0;
  double half_width = 0.1;
  double strength = 0.0;
};

/// Optical-depth matrix (m x species) summing the given lines per species.
Matrix tau_from_lines(const Vector& grid, const std::vector<std::vector<LineSpec>>& species);

/// Random optical-depth profiles: 5 to 20 Gaussian lines per species with
/// random centers, widths and strengths. Reseeds (up to 10 attempts) until
/// the columns are linearly independent, else throws GenerationError.
Matrix gen_tau_profiles(const Vector& grid, Index p, std::uint64_t seed);

/// Smooth positive solar spectrum with a few Fraunhofer-like dips.
Vector gen_solar_spectrum(const Vector& grid, double level, std::uint64_t seed);

/// Beer-law datasets y = eta * (1 + gamma / snr), gamma ~ N(0, 1) i.i.d.
SyntheticProblem gen_spectra(const TruthSpec& spec);

/// Exponential-model datasets with the same noise law.
SyntheticProblem gen_exp_problem(const TruthSpec& spec);

/// Dispatches on spec.kind.
SyntheticProblem generate(const TruthSpec& spec);

/// Default nonlinear truth of the Beer frame (CO2 and H2O scale factors).
Vector default_beer_alpha();

/// Satellite-like frame: datasets alternate between a strong band (809
/// pixels near 6250 cm^-1) and a weak band (651 pixels near 5000 cm^-1),
/// two per sounding; n = 3 reflectivity terms, p = 2 species. The first s
/// datasets of a larger frame with the same seed are identical to the
/// s-dataset frame.
TruthSpec frame_truth(Index datasets, double snr, std::uint64_t seed,
                      const Vector& alpha_true = default_beer_alpha());

/// Exponential problem with s datasets of pairwise distinct sizes in [10, 30]
/// (sizes repeat only when s > 21).
TruthSpec exp_truth(Index s, const Vector& alpha_true, double snr, std::uint64_t seed);

}  // namespace sepvar
