#include "sepvar/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <thread>

namespace sepvar {

using nlohmann::json;

Vector default_exp_alpha() { return (Vector(2) << 0.5, 2.0).finished(); }

Vector BenchConfig::resolved_alpha_true() const {
  if (alpha_true.size() > 0) return alpha_true;
  return kind == ModelKind::Beer ? default_beer_alpha() : default_exp_alpha();
}

Vector BenchConfig::resolved_alpha0() const {
  if (alpha0.size() > 0) return alpha0;
  const Vector truth = resolved_alpha_true();
  // Equal decay rates would make the exponential columns identical.
  return kind == ModelKind::Beer ? Vector(Vector::Ones(truth.size())) : Vector(1.1 * truth);
}

void BenchConfig::validate() const {
  if (seeds < 0) throw InvalidInput("seeds must be non-negative");
  if (repeats < 1) throw InvalidInput("repeats must be at least 1");
  if (threads < 0) throw InvalidInput("threads must be non-negative");
  for (Index s : s_values) {
    if (s < 1) throw InvalidInput("s values must be positive");
  }
  for (double snr : snr_values) {
    if (!(snr > 0.0)) throw InvalidInput("snr values must be positive");
  }
  const Vector truth = resolved_alpha_true();
  if (kind == ModelKind::Beer && truth.size() != 2) {
    throw InvalidInput("the Beer frame has two species; alpha_true needs length 2");
  }
  if (resolved_alpha0().size() != truth.size()) {
    throw InvalidInput("alpha0 and alpha_true differ in length");
  }
  lm.validate();
}

namespace {

double json_double(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

Vector json_vector(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = json_double(j[i]);
  return v;
}

BenchMode parse_mode(const std::string& s) {
  if (s == "mrhs") return BenchMode::Mrhs;
  if (s == "single") return BenchMode::Single;
  if (s == "both") return BenchMode::Both;
  throw InvalidInput("unknown mode '" + s + "'; expected mrhs, single or both");
}

}  // namespace

BenchConfig parse_bench_config(const std::string& json_text) {
  static const std::set<std::string> known = {
      "kind",  "methods", "s_values", "snr_values", "seeds",   "base_seed",
      "alpha_true", "alpha0", "mode", "threads", "repeats", "lm"};
  BenchConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw InvalidInput("bench config must be a JSON object");
    for (const auto& item : j.items()) {
      if (!known.count(item.key())) throw InvalidInput("unknown bench config key '" + item.key() + "'");
    }
    if (j.contains("kind")) cfg.kind = parse_model_kind(j["kind"].get<std::string>());
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("s_values")) cfg.s_values = j["s_values"].get<std::vector<Index>>();
    if (j.contains("snr_values")) {
      cfg.snr_values.clear();
      for (const auto& v : j["snr_values"]) cfg.snr_values.push_back(json_double(v));
    }
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<int>();
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("alpha_true")) cfg.alpha_true = json_vector(j["alpha_true"]);
    if (j.contains("alpha0")) cfg.alpha0 = json_vector(j["alpha0"]);
    if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("repeats")) cfg.repeats = j["repeats"].get<int>();
    if (j.contains("lm")) {
      const json& lm = j["lm"];
      cfg.lm.max_iter = lm.value("max_iter", cfg.lm.max_iter);
      cfg.lm.ftol = lm.value("ftol", cfg.lm.ftol);
      cfg.lm.xtol = lm.value("xtol", cfg.lm.xtol);
      cfg.lm.gtol = lm.value("gtol", cfg.lm.gtol);
      cfg.lm.lambda0 = lm.value("lambda0", cfg.lm.lambda0);
      cfg.lm.lambda_up = lm.value("lambda_up", cfg.lm.lambda_up);
      cfg.lm.lambda_down = lm.value("lambda_down", cfg.lm.lambda_down);
    }
  } catch (const json::exception& e) {
    throw InvalidInput("bench config: " + std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

SyntheticProblem bench_problem(const BenchConfig& cfg, Index s, double snr, int replicate) {
  const std::uint64_t seed = stream_seed(cfg.base_seed, static_cast<std::uint64_t>(replicate));
  const Vector truth = cfg.resolved_alpha_true();
  if (cfg.kind == ModelKind::Beer) return generate(frame_truth(s, snr, seed, truth));
  return generate(exp_truth(s, truth, snr, seed));
}

RunRecord run_cell(const MultiProblem& problem, const TruthSpec& truth, Method method,
                   const Vector& alpha0, const LMConfig& lm, int repeats) {
  RunRecord rec;
  rec.method = std::string(to_string(method));
  rec.s = problem.s();
  rec.snr = truth.snr;
  rec.seed = truth.seed;

  SolverConfig cfg;
  cfg.method = method;
  cfg.lm = lm;
  try {
    FitResult result = fit(problem, cfg, alpha0);
    double best = result.wall_time;
    cfg.diagnostics = false;
    for (int i = 1; i < repeats; ++i) best = std::min(best, fit(problem, cfg, alpha0).wall_time);

    rec.alpha_hat = result.alpha_hat;
    rec.relative_errors = relative_error(truth.alpha_true, result.alpha_hat);
    rec.wall_time_s = best;
    rec.n_iter = result.lm_report.n_iter;
    rec.status = std::string(to_string(result.lm_report.status));
    if (result.diagnostics) {
      rec.sigma = result.diagnostics->sigma;
      rec.r_score = result.diagnostics->r_score;
      rec.conf_bound_alpha = result.diagnostics->conf_bounds.head(problem.p());
    }
  } catch (const Error& e) {
    rec.status = std::string("failed-") + e.kind();
    rec.error = e.what();
  }
  return rec;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SEPVAR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunRecord> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  struct Task {
    Method method;
    Index s;
    double snr;
    int replicate;
    bool single;
  };
  std::vector<Task> tasks;
  for (Method method : cfg.methods) {
    for (Index s : cfg.s_values) {
      for (double snr : cfg.snr_values) {
        for (int r = 0; r < cfg.seeds; ++r) {
          if (cfg.mode != BenchMode::Single) tasks.push_back({method, s, snr, r, false});
          if (cfg.mode != BenchMode::Mrhs) tasks.push_back({method, s, snr, r, true});
        }
      }
    }
  }

  const Vector alpha0 = cfg.resolved_alpha0();
  std::vector<std::vector<RunRecord>> out(tasks.size());
  auto run_task = [&](const Task& task) {
    std::vector<RunRecord> rows;
    SyntheticProblem sp;
    try {
      sp = bench_problem(cfg, task.s, task.snr, task.replicate);
    } catch (const Error& e) {
      RunRecord rec;
      rec.method = std::string(to_string(task.method));
      rec.mode = task.single ? "single" : "mrhs";
      rec.s = task.s;
      rec.snr = task.snr;
      rec.seed = stream_seed(cfg.base_seed, static_cast<std::uint64_t>(task.replicate));
      rec.status = std::string("failed-") + e.kind();
      rec.error = e.what();
      rows.push_back(std::move(rec));
      return rows;
    }
    if (!task.single) {
      rows.push_back(run_cell(sp.problem, sp.truth, task.method, alpha0, cfg.lm, cfg.repeats));
    } else {
      for (Index k = 0; k < task.s; ++k) {
        MultiProblem one;
        one.model = sp.problem.model;
        one.datasets.push_back(sp.problem.datasets[static_cast<std::size_t>(k)]);
        RunRecord rec = run_cell(one, sp.truth, task.method, alpha0, cfg.lm, cfg.repeats);
        rec.mode = "single";
        rec.s = task.s;
        rec.dataset = static_cast<int>(k);
        rows.push_back(std::move(rec));
      }
    }
    return rows;
  };

  const int threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) out[i] = run_task(tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) out[i] = run_task(tasks[i]);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<RunRecord> rows;
  for (auto& batch : out) {
    for (auto& r : batch) rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

bool usable(const RunRecord& r) {
  return r.kind == "run" && r.error.empty() && r.alpha_hat.size() > 0 && r.alpha_hat.allFinite();
}

// Componentwise mean and sample std of equally long vectors.
std::pair<Vector, Vector> moments(const std::vector<Vector>& xs) {
  if (xs.empty() || xs.front().size() == 0) return {Vector(), Vector()};
  const Index len = xs.front().size();
  Vector mean = Vector::Zero(len);
  for (const auto& x : xs) {
    if (x.size() != len) return {Vector(), Vector()};
    mean += x;
  }
  mean /= static_cast<double>(xs.size());
  Vector var = Vector::Zero(len);
  for (const auto& x : xs) var.array() += (x - mean).array().square();
  if (xs.size() < 2) return {mean, Vector::Constant(len, std::numeric_limits<double>::quiet_NaN())};
  var /= static_cast<double>(xs.size() - 1);
  return {mean, var.array().sqrt().matrix()};
}

std::pair<double, double> moments(const std::vector<double>& xs) {
  std::vector<Vector> vs;
  for (double x : xs) vs.push_back(Vector::Constant(1, x));
  const auto [m, s] = moments(vs);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {m.size() ? m[0] : nan, s.size() ? s[0] : nan};
}

}  // namespace

std::vector<RunRecord> summarize(const std::vector<RunRecord>& runs) {
  using Key = std::tuple<std::string, std::string, Index, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : runs) {
    if (r.kind != "run") continue;
    const Key key{r.method, r.mode, r.s, r.snr};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<RunRecord> rows;
  for (const Key& key : order) {
    const auto& members = groups[key];
    std::vector<Vector> alpha, rel, conf;
    std::vector<double> sigma, rscore, time, iters;
    for (const RunRecord* r : members) {
      if (!usable(*r)) continue;
      alpha.push_back(r->alpha_hat);
      rel.push_back(r->relative_errors);
      if (r->conf_bound_alpha.size() > 0) conf.push_back(r->conf_bound_alpha);
      if (std::isfinite(r->sigma)) sigma.push_back(r->sigma);
      if (std::isfinite(r->r_score)) rscore.push_back(r->r_score);
      time.push_back(r->wall_time_s);
      iters.push_back(r->n_iter);
    }
    const auto a = moments(alpha);
    const auto e = moments(rel);
    const auto c = moments(conf);
    const auto sg = moments(sigma);
    const auto rs = moments(rscore);
    const auto tm = moments(time);
    const auto it = moments(iters);

    for (int which = 0; which < 2; ++which) {
      RunRecord row;
      row.kind = which == 0 ? "mean" : "std";
      row.method = std::get<0>(key);
      row.mode = std::get<1>(key);
      row.s = std::get<2>(key);
      row.snr = std::get<3>(key);
      row.alpha_hat = which == 0 ? a.first : a.second;
      row.relative_errors = which == 0 ? e.first : e.second;
      row.conf_bound_alpha = which == 0 ? c.first : c.second;
      row.sigma = which == 0 ? sg.first : sg.second;
      row.r_score = which == 0 ? rs.first : rs.second;
      row.wall_time_s = which == 0 ? tm.first : tm.second;
      row.n_iter = which == 0 ? it.first : it.second;
      row.status = "ok " + std::to_string(alpha.size()) + "/" + std::to_string(members.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<RunRecord>& records) {
  std::string out = run_record_csv_header() + "\n";
  for (const auto& r : records) out += run_record_csv_row(r) + "\n";
  return out;
}

}  // namespace sepvar
