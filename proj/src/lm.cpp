#include "sepvar/lm.hpp"

#include <Eigen/QR>

#include <cmath>
#include <optional>

namespace sepvar {

void LMConfig::validate() const {
  if (max_iter < 1) throw InvalidInput("max_iter must be >= 1");
  if (!(ftol > 0.0 && xtol > 0.0 && gtol > 0.0)) throw InvalidInput("tolerances must be > 0");
  if (!(lambda0 >= 0.0)) throw InvalidInput("lambda0 must be >= 0");
  if (!(lambda_up > 1.0 && lambda_down > 0.0 && lambda_down < 1.0)) {
    throw InvalidInput("need lambda_up > 1 > lambda_down > 0");
  }
}

std::string_view to_string(LMStatus status) {
  switch (status) {
    case LMStatus::ConvergedFtol: return "converged-ftol";
    case LMStatus::ConvergedXtol: return "converged-xtol";
    case LMStatus::ConvergedGtol: return "converged-gtol";
    case LMStatus::MaxIter: return "max-iter";
    case LMStatus::FailedLinearSolve: return "failed-linear-solve";
  }
  return "unknown";
}

namespace {

constexpr double kLambdaCeiling = 1e12;
constexpr double kLambdaRestart = 1e-3;

double half_sq(const Vector& r) { return 0.5 * r.squaredNorm(); }

// Upper triangle of J and the matching head of Q^T r; J is padded with zero
// rows when it has fewer rows than columns.
struct Triangular {
  Matrix r;
  Vector qtr;
};

Triangular triangularize(const Matrix& jac, const Vector& res) {
  const Index n = jac.cols();
  const Index rows = std::max(jac.rows(), n);
  Matrix j = Matrix::Zero(rows, n);
  Vector r = Vector::Zero(rows);
  j.topRows(jac.rows()) = jac;
  r.head(res.size()) = res;

  Eigen::HouseholderQR<Matrix> qr(j);
  Triangular t;
  t.r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  r.applyOnTheLeft(qr.householderQ().transpose());
  t.qtr = r.head(n);
  return t;
}

// Solves min |[R; sqrt(lambda) D] dx + [qtr; 0]|; empty optional when singular.
std::optional<Vector> damped_step(const Triangular& t, const Vector& diag, double lambda) {
  const Index n = t.r.cols();
  Matrix a(2 * n, n);
  a.topRows(n) = t.r;
  a.bottomRows(n) = (std::sqrt(lambda) * diag).asDiagonal();
  Vector b = Vector::Zero(2 * n);
  b.head(n) = -t.qtr;

  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < n) return std::nullopt;
  Vector dx = qr.solve(b);
  if (!dx.allFinite()) return std::nullopt;
  return dx;
}

}  // namespace

LMReport lm_solve(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn, const Vector& x0,
                  const LMConfig& cfg) {
  cfg.validate();
  if (!x0.allFinite()) throw InvalidInput("x0 must be finite");

  LMReport report;
  Vector x = x0;
  Vector r = residual_fn(x);
  report.n_feval = 1;
  if (!r.allFinite()) throw EvaluationFailed("non-finite residual at the initial point", x);
  double cost = half_sq(r);
  report.cost_history.push_back(cost);
  if (cfg.record_iterates) report.iterates.push_back(x);

  auto finish = [&](LMStatus status) {
    report.status = status;
    report.x_final = x;
    return report;
  };

  if (x.size() == 0) return finish(LMStatus::ConvergedGtol);

  Matrix jac = jacobian_fn(x);
  if (!jac.allFinite()) throw EvaluationFailed("non-finite Jacobian at the initial point", x);
  if (jac.rows() != r.size() || jac.cols() != x.size()) {
    throw InvalidInput("Jacobian shape does not match residual and parameters");
  }
  if ((jac.transpose() * r).lpNorm<Eigen::Infinity>() < cfg.gtol) {
    return finish(LMStatus::ConvergedGtol);
  }

  double lambda = cfg.lambda0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    report.n_iter = iter;

    Vector diag = jac.colwise().norm().transpose();
    for (Index i = 0; i < diag.size(); ++i) {
      if (diag[i] == 0.0) diag[i] = 1.0;
    }
    const Triangular tri = triangularize(jac, r);
    // |qtr|^2 bounds the decrease of |r|^2 any step can achieve on the
    // linearized model.
    if (tri.qtr.squaredNorm() < cfg.ftol * r.squaredNorm()) {
      return finish(LMStatus::ConvergedFtol);
    }

    while (true) {
      std::optional<Vector> step = damped_step(tri, diag, lambda);
      if (!step) {
        lambda = lambda > 0.0 ? lambda * cfg.lambda_up : kLambdaRestart;
        if (lambda > kLambdaCeiling) return finish(LMStatus::FailedLinearSolve);
        continue;
      }

      const Vector x_new = x + *step;
      const double step_norm = step->norm();
      const bool small_step = step_norm < cfg.xtol * (cfg.xtol + x.norm());

      Vector r_new;
      bool usable = true;
      try {
        r_new = residual_fn(x_new);
        usable = r_new.allFinite();
      } catch (const Overflow&) {
        usable = false;
      }
      ++report.n_feval;
      const double cost_new = usable ? half_sq(r_new) : 0.0;

      if (usable && cost_new < cost) {
        const double rel_decrease = (cost - cost_new) / cost;
        x = x_new;
        r = std::move(r_new);
        cost = cost_new;
        report.cost_history.push_back(cost);
        if (cfg.record_iterates) report.iterates.push_back(x);

        jac = jacobian_fn(x);
        if (!jac.allFinite()) throw EvaluationFailed("non-finite Jacobian at accepted point", x);
        lambda *= cfg.lambda_down;

        if ((jac.transpose() * r).lpNorm<Eigen::Infinity>() < cfg.gtol) {
          return finish(LMStatus::ConvergedGtol);
        }
        if (rel_decrease < cfg.ftol) return finish(LMStatus::ConvergedFtol);
        if (small_step) return finish(LMStatus::ConvergedXtol);
        break;
      }

      if (small_step) return finish(LMStatus::ConvergedXtol);
      lambda = lambda > 0.0 ? lambda * cfg.lambda_up : kLambdaRestart;
      if (lambda > kLambdaCeiling) return finish(LMStatus::FailedLinearSolve);
    }
  }
  return finish(LMStatus::MaxIter);
}

}  // namespace sepvar
