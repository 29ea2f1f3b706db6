#include "sepvar/solver.hpp"

#include <chrono>
#include <string>

namespace sepvar {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::VpGolubLeVeque: return "vp-gl";
    case Method::VpKaufman: return "vp-km";
    case Method::VpNaive: return "vp-naive";
    case Method::NlsFull: return "nls-full";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + std::string(name) +
                     "'; expected vp-gl, vp-km, vp-naive or nls-full");
}

double FitResult::final_cost() const {
  double c = 0.0;
  for (const auto& r : residuals) c += 0.5 * r.squaredNorm();
  return c;
}

Vector FitResult::stacked_residual() const {
  Index rows = 0;
  for (const auto& r : residuals) rows += r.size();
  Vector out(rows);
  Index off = 0;
  for (const auto& r : residuals) {
    out.segment(off, r.size()) = r;
    off += r.size();
  }
  return out;
}

Vector pack_joint(const Vector& alpha, const std::vector<Vector>& betas) {
  Index len = alpha.size();
  for (const auto& b : betas) len += b.size();
  Vector x(len);
  x.head(alpha.size()) = alpha;
  Index off = alpha.size();
  for (const auto& b : betas) {
    x.segment(off, b.size()) = b;
    off += b.size();
  }
  return x;
}

namespace {

BasisEval eval_tagged(const MultiProblem& problem, const Vector& alpha, Index k) {
  try {
    return problem.model->eval(alpha, problem.datasets[static_cast<std::size_t>(k)]);
  } catch (Error& e) {
    e.set_dataset(static_cast<int>(k));
    throw;
  }
}

void check_joint(const Vector& x, const MultiProblem& problem) {
  const Index expected = problem.p() + problem.s() * problem.n();
  if (x.size() != expected) {
    throw InvalidInput("joint vector has length " + std::to_string(x.size()) + ", expected " +
                       std::to_string(expected));
  }
}

std::vector<BasisEval> eval_all(const MultiProblem& problem, const Vector& alpha) {
  std::vector<BasisEval> bases;
  bases.reserve(static_cast<std::size_t>(problem.s()));
  for (Index k = 0; k < problem.s(); ++k) bases.push_back(eval_tagged(problem, alpha, k));
  return bases;
}

Vector joint_residual(const Vector& x, const MultiProblem& problem,
                      const std::vector<BasisEval>& bases) {
  const Index p = problem.p();
  const Index n = problem.n();
  Vector r(problem.total_rows());
  Index off = 0;
  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    r.segment(off, d.size()) =
        bases[static_cast<std::size_t>(k)].phi * x.segment(p + k * n, n) - d.y;
    off += d.size();
  }
  return r;
}

Matrix joint_jacobian(const Vector& x, const MultiProblem& problem,
                      const std::vector<BasisEval>& bases) {
  const Index p = problem.p();
  const Index n = problem.n();
  Matrix jac = Matrix::Zero(problem.total_rows(), p + problem.s() * n);
  Index off = 0;
  for (Index k = 0; k < problem.s(); ++k) {
    const Index m = problem.datasets[static_cast<std::size_t>(k)].size();
    const BasisEval& b = bases[static_cast<std::size_t>(k)];
    const auto beta = x.segment(p + k * n, n);
    for (Index l = 0; l < p; ++l) {
      jac.col(l).segment(off, m) = b.dphi[static_cast<std::size_t>(l)] * beta;
    }
    jac.block(off, p + k * n, m, n) = b.phi;
    off += m;
  }
  return jac;
}

bool same_point(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

ReducedEval eval_variant(Method method, const Vector& alpha, const MultiProblem& problem,
                         const SolverConfig& cfg) {
  switch (method) {
    case Method::VpGolubLeVeque: return eval_gl(alpha, problem);
    case Method::VpKaufman: return eval_km(alpha, problem);
    case Method::VpNaive: return eval_naive(alpha, problem, cfg.naive);
    case Method::NlsFull: break;
  }
  throw InvalidInput("not a variable projection method");
}

void fit_vp(const MultiProblem& problem, const SolverConfig& cfg, const Vector& alpha0,
            FitResult& result) {
  std::optional<ReducedEval> cached;
  Vector cached_at;
  auto evaluate = [&](const Vector& alpha) -> const ReducedEval& {
    if (!cached || !same_point(cached_at, alpha)) {
      cached.reset();
      cached = eval_variant(cfg.method, alpha, problem, cfg);
      cached_at = alpha;
    }
    return *cached;
  };

  result.lm_report = lm_solve([&](const Vector& a) { return evaluate(a).z; },
                              [&](const Vector& a) { return evaluate(a).jac; }, alpha0, cfg.lm);
  result.alpha_hat = result.lm_report.x_final;

  const ReducedEval& final_eval = evaluate(result.alpha_hat);
  for (const auto& cache : final_eval.per_dataset) {
    result.beta_hat.push_back(cache.beta);
    result.residuals.push_back(cache.residual);
  }
}

void fit_joint(const MultiProblem& problem, const SolverConfig& cfg, const Vector& alpha0,
               FitResult& result) {
  const Index p = problem.p();
  const Index n = problem.n();

  std::vector<Vector> beta0;
  if (cfg.beta0 == BetaStart::LinearSolve) {
    beta0 = initial_beta(problem, alpha0);
  } else {
    beta0.assign(static_cast<std::size_t>(problem.s()), Vector::Zero(n));
  }

  std::vector<BasisEval> bases;
  Vector bases_at;
  auto basis_at = [&](const Vector& x) -> const std::vector<BasisEval>& {
    const Vector alpha = x.head(p);
    if (bases.empty() || !same_point(bases_at, alpha)) {
      bases = eval_all(problem, alpha);
      bases_at = alpha;
    }
    return bases;
  };

  result.lm_report = lm_solve(
      [&](const Vector& x) { return joint_residual(x, problem, basis_at(x)); },
      [&](const Vector& x) { return joint_jacobian(x, problem, basis_at(x)); },
      pack_joint(alpha0, beta0), cfg.lm);

  const Vector& x = result.lm_report.x_final;
  result.alpha_hat = x.head(p);
  const auto& final_bases = basis_at(x);
  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    Vector beta = x.segment(p + k * n, n);
    result.residuals.push_back(d.y - final_bases[static_cast<std::size_t>(k)].phi * beta);
    result.beta_hat.push_back(std::move(beta));
  }
}

}  // namespace

Vector nls_full_residual(const Vector& x, const MultiProblem& problem) {
  check_joint(x, problem);
  return joint_residual(x, problem, eval_all(problem, x.head(problem.p())));
}

Matrix nls_full_jacobian(const Vector& x, const MultiProblem& problem) {
  check_joint(x, problem);
  return joint_jacobian(x, problem, eval_all(problem, x.head(problem.p())));
}

std::vector<Vector> initial_beta(const MultiProblem& problem, const Vector& alpha0) {
  std::vector<Vector> betas;
  betas.reserve(static_cast<std::size_t>(problem.s()));
  for (Index k = 0; k < problem.s(); ++k) {
    const BasisEval b = eval_tagged(problem, alpha0, k);
    try {
      betas.push_back(pinv_apply(thin_qr(b.phi), problem.datasets[static_cast<std::size_t>(k)].y));
    } catch (Error& e) {
      e.set_dataset(static_cast<int>(k));
      throw;
    }
  }
  return betas;
}

FitResult fit(const MultiProblem& problem, const SolverConfig& cfg, const Vector& alpha0) {
  FitResult result;
  result.method = cfg.method;
  try {
    problem.validate();
    cfg.lm.validate();
    if (alpha0.size() != problem.p()) {
      throw InvalidInput("alpha0 has length " + std::to_string(alpha0.size()) + ", expected " +
                         std::to_string(problem.p()));
    }
    if (!alpha0.allFinite()) throw InvalidInput("alpha0 must be finite");

    const auto start = std::chrono::steady_clock::now();
    if (cfg.method == Method::NlsFull) {
      fit_joint(problem, cfg, alpha0, result);
    } else {
      fit_vp(problem, cfg, alpha0, result);
    }
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Index dof = problem.total_rows() - problem.s() * problem.n() - problem.p();
    if (cfg.diagnostics && dof >= 1) result.diagnostics = diagnose(result, problem);
  } catch (Error& e) {
    e.set_method(std::string(to_string(cfg.method)));
    throw;
  }
  return result;
}

}  // namespace sepvar
