#include "cli.hpp"

#include "sepvar/bench.hpp"
#include "sepvar/io.hpp"
#include "sepvar/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <ostream>
#include <set>

namespace sepvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double json_double(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

/// Generator config: {"kind": "beer", "soundings": 8, "snr": 200, "seed": 42}
/// or {"kind": "exp", "datasets": 4, "alpha_true": [0.5, 2], ...}.
TruthSpec truth_from_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  static const std::set<std::string> known = {"kind",       "datasets",          "soundings",
                                              "snr",        "seed",              "alpha_true",
                                              "half_width", "spectroscopy_seed"};
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("generator config must be a JSON object");
    for (const auto& item : j.items()) {
      if (!known.count(item.key())) throw InvalidInput("unknown config key '" + item.key() + "'");
    }
    const ModelKind kind = parse_model_kind(j.value("kind", std::string("beer")));
    Index datasets = 0;
    if (j.contains("soundings")) datasets = 2 * j["soundings"].get<Index>();
    if (j.contains("datasets")) {
      if (datasets && datasets != j["datasets"].get<Index>()) {
        throw InvalidInput("datasets and soundings disagree");
      }
      datasets = j["datasets"].get<Index>();
    }
    if (datasets < 1) throw InvalidInput("config needs a positive datasets or soundings count");
    const double snr = j.contains("snr") ? json_double(j["snr"]) : std::numeric_limits<double>::infinity();
    const std::uint64_t seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{0});

    Vector alpha = kind == ModelKind::Beer ? default_beer_alpha() : default_exp_alpha();
    if (j.contains("alpha_true")) {
      const auto& a = j["alpha_true"];
      alpha.resize(static_cast<Index>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) alpha[static_cast<Index>(i)] = json_double(a[i]);
    }

    TruthSpec spec = kind == ModelKind::Beer ? frame_truth(datasets, snr, seed, alpha)
                                             : exp_truth(datasets, alpha, snr, seed);
    if (j.contains("half_width")) spec.half_width = json_double(j["half_width"]);
    if (j.contains("spectroscopy_seed")) spec.spectroscopy_seed = j["spectroscopy_seed"].get<std::uint64_t>();
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InvalidInput("generator config: " + std::string(e.what()));
  }
}

Vector default_alpha0(const Bundle& bundle) {
  const Index p = bundle.problem.p();
  if (bundle.problem.model->kind() == "beer") return Vector::Ones(p);
  if (bundle.truth) return 1.1 * bundle.truth->alpha_true;
  return Vector::LinSpaced(p, 0.5, 0.5 * static_cast<double>(p));
}

std::string residual_csv(const MultiProblem& problem, const FitResult& result) {
  std::string csv = "dataset,index,t,residual\n";
  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    const Vector& r = result.residuals[static_cast<std::size_t>(k)];
    for (Index i = 0; i < r.size(); ++i) {
      csv += std::to_string(k) + ',' + std::to_string(i) + ',' + format_double(d.t[i]) + ',' +
             format_double(r[i]) + '\n';
    }
  }
  return csv;
}

int cmd_generate(const std::string& config, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::ostream& out) {
  const TruthSpec spec = truth_from_config(read_text_file(config), seed);
  write_bundle(out_dir, generate(spec));
  out << "wrote " << spec.s() << " datasets to " << out_dir << "\n";
  return kOk;
}

int cmd_fit(const std::string& bundle_dir, const std::string& method_name,
            const std::vector<double>& alpha0_arg, const std::string& out_dir, std::ostream& out) {
  const Bundle bundle = read_bundle(bundle_dir);
  const Method method = parse_method(method_name);
  Vector alpha0 = default_alpha0(bundle);
  if (!alpha0_arg.empty()) {
    alpha0 = Eigen::Map<const Vector>(alpha0_arg.data(), static_cast<Index>(alpha0_arg.size()));
  }

  SolverConfig cfg;
  cfg.method = method;
  const FitResult result = fit(bundle.problem, cfg, alpha0);

  RunRecord rec;
  rec.method = method_name;
  rec.s = bundle.problem.s();
  rec.snr = bundle.truth ? bundle.truth->snr : std::numeric_limits<double>::quiet_NaN();
  rec.seed = bundle.truth ? bundle.truth->seed : 0;
  rec.alpha_hat = result.alpha_hat;
  if (bundle.truth) rec.relative_errors = relative_error(bundle.truth->alpha_true, result.alpha_hat);
  rec.wall_time_s = result.wall_time;
  rec.n_iter = result.lm_report.n_iter;
  rec.status = std::string(to_string(result.lm_report.status));
  if (result.diagnostics) {
    rec.sigma = result.diagnostics->sigma;
    rec.r_score = result.diagnostics->r_score;
    rec.conf_bound_alpha = result.diagnostics->conf_bounds.head(bundle.problem.p());
  }

  const std::string record = run_record_json(rec);
  if (out_dir.empty()) {
    out << record;
  } else {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    write_text_file(fs::path(out_dir) / "run.json", record);
    write_text_file(fs::path(out_dir) / "residuals.csv", residual_csv(bundle.problem, result));
    out << "wrote " << (fs::path(out_dir) / "run.json").string() << "\n";
  }
  return result.lm_report.converged() ? kOk : kSolverFailure;
}

int cmd_bench(const std::string& config, const std::string& out_path, int threads,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  BenchConfig cfg = parse_bench_config(read_text_file(config));
  if (threads > 0) cfg.threads = threads;
  if (seed) cfg.base_seed = *seed;
  std::vector<RunRecord> rows = run_bench(cfg);
  std::vector<RunRecord> summary = summarize(rows);
  rows.insert(rows.end(), summary.begin(), summary.end());
  const std::string csv = bench_csv(rows);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_text_file(out_path, csv);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Separable least squares with shared nonlinear parameters", "sepvar"};
  app.require_subcommand(1);

  std::string config, out_path, bundle_dir, method_name = "vp-gl";
  std::vector<double> alpha0;
  int threads = 0;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("generate", "write a synthetic problem bundle");
  gen->add_option("--config", config, "generator config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "bundle directory")->required();
  gen->add_option("--seed", seed, "override the config seed");

  auto* fit_cmd = app.add_subcommand("fit", "fit a problem bundle");
  fit_cmd->add_option("bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--method", method_name, "solver")
      ->check(CLI::IsMember({"vp-gl", "vp-km", "vp-naive", "nls-full"}));
  fit_cmd->add_option("--alpha0", alpha0, "starting nonlinear parameters")->delimiter(',');
  fit_cmd->add_option("--out", out_path, "output directory (run.json, residuals.csv)");

  auto* bench = app.add_subcommand("bench", "run a parameter sweep");
  bench->add_option("--config", config, "sweep config (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out_path, "results CSV (default stdout)");
  bench->add_option("--threads", threads, "worker threads (default SEPVAR_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "override base_seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(config, out_path, seed, out);
    if (*fit_cmd) return cmd_fit(bundle_dir, method_name, alpha0, out_path, out);
    return cmd_bench(config, out_path, threads, seed, out);
  } catch (const std::exception& e) {
    out << error_json(e);
    return kSolverFailure;
  }
}

}  // namespace sepvar::cli
