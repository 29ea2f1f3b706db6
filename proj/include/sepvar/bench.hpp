#pragma once

#include "sepvar/io.hpp"
#include "sepvar/solver.hpp"

#include <string>
#include <vector>

namespace sepvar {

enum class BenchMode { Mrhs, Single, Both };

/// Sweep over methods x s x SNR x replicates. Replicate r of every cell
/// uses the problem seed stream_seed(base_seed, r), so all methods, modes
/// and dataset counts of one replicate see the same data (the s-dataset
/// problem is a prefix of the larger ones).
struct BenchConfig {
  ModelKind kind = ModelKind::Beer;
  std::vector<Method> methods{Method::VpGolubLeVeque};
  std::vector<Index> s_values{2};
  std::vector<double> snr_values{200.0};
  int seeds = 1;
  std::uint64_t base_seed = 1;
  Vector alpha_true;  ///< empty: model default
  Vector alpha0;      ///< empty: ones for Beer, 1.1 alpha_true for exp
  BenchMode mode = BenchMode::Mrhs;
  int threads = 0;  ///< 0: SEPVAR_THREADS or hardware concurrency
  int repeats = 1;  ///< timed fits per cell; the minimum time is kept
  LMConfig lm;

  void validate() const;
  Vector resolved_alpha_true() const;
  Vector resolved_alpha0() const;
};

/// Parses the JSON sweep description. Unknown keys are rejected.
BenchConfig parse_bench_config(const std::string& json_text);

/// Default exponential truth used by the sweeps.
Vector default_exp_alpha();

/// Problem of replicate `replicate` with s datasets at the given SNR.
SyntheticProblem bench_problem(const BenchConfig& cfg, Index s, double snr, int replicate);

/// Fits one problem and fills a record; solver failures are recorded in
/// status and error instead of thrown.
RunRecord run_cell(const MultiProblem& problem, const TruthSpec& truth, Method method,
                   const Vector& alpha0, const LMConfig& lm, int repeats);

/// Every run row, in sweep order (method, s, snr, replicate, mode, dataset)
/// whatever the thread count.
std::vector<RunRecord> run_bench(const BenchConfig& cfg);

/// Mean and std rows per (method, mode, s, snr), over successful runs.
std::vector<RunRecord> summarize(const std::vector<RunRecord>& runs);

/// Header plus one line per record.
std::string bench_csv(const std::vector<RunRecord>& records);

/// Thread count from the argument, else SEPVAR_THREADS, else hardware.
int resolve_threads(int requested);

}  // namespace sepvar
