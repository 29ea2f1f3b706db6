#pragma once

#include "sepvar/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sepvar {

inline constexpr int kSchemaVersion = 1;

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// printf "%.17g", which reads back to the same double; non-finite values
/// print as inf, -inf and nan.
std::string format_double(double v);
/// Inverse of format_double; throws InvalidInput on malformed text.
double parse_double(const std::string& text);

/// A problem as stored on disk, with its truth block when one was written.
struct Bundle {
  MultiProblem problem;
  std::optional<TruthSpec> truth;
};

/// Writes manifest.json plus one CSV per dataset into `dir` (created if
/// missing). Dataset CSV columns are t, y and, for the Beer model,
/// I0, tau_1 .. tau_p.
void write_bundle(const std::filesystem::path& dir, const MultiProblem& problem,
                  const TruthSpec* truth = nullptr);
inline void write_bundle(const std::filesystem::path& dir, const SyntheticProblem& sp) {
  write_bundle(dir, sp.problem, &sp.truth);
}

Bundle read_bundle(const std::filesystem::path& dir);

/// One fit outcome. Summary rows of a sweep reuse the type with kind
/// "mean" or "std" and averaged fields.
struct RunRecord {
  std::string kind = "run";
  std::string method;
  std::string mode = "mrhs";  ///< "mrhs" or "single"
  Index s = 0;
  double snr = 0.0;
  std::uint64_t seed = 0;
  int dataset = -1;  ///< dataset fitted alone in single mode, else -1
  Vector alpha_hat;
  Vector relative_errors;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double r_score = std::numeric_limits<double>::quiet_NaN();
  Vector conf_bound_alpha;
  double wall_time_s = 0.0;
  double n_iter = 0.0;
  std::string status;
  std::string error;
};

std::string run_record_json(const RunRecord& record);
RunRecord parse_run_record_json(const std::string& text);

/// Header line of the results table, without trailing newline.
std::string run_record_csv_header();
std::string run_record_csv_row(const RunRecord& record);
RunRecord parse_run_record_csv_row(const std::string& line);

/// Error report printed by the command line tool on solver failure.
std::string error_json(const std::exception& e);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sepvar
