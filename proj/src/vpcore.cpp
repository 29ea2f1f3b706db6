#include "sepvar/vpcore.hpp"

namespace sepvar {

Index MultiProblem::total_rows() const {
  Index rows = 0;
  for (const auto& d : datasets) rows += d.size();
  return rows;
}

Index MultiProblem::offset(Index k) const {
  Index off = 0;
  for (Index j = 0; j < k; ++j) off += datasets[static_cast<std::size_t>(j)].size();
  return off;
}

Vector MultiProblem::stacked_y() const {
  Vector y(total_rows());
  Index off = 0;
  for (const auto& d : datasets) {
    y.segment(off, d.size()) = d.y;
    off += d.size();
  }
  return y;
}

void MultiProblem::validate() const {
  if (!model) throw InvalidInput("problem has no model");
  if (datasets.empty()) throw InvalidInput("problem has no datasets");
  Index dof = 0;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const Dataset& d = datasets[k];
    try {
      validate_dataset(d);
    } catch (Error& e) {
      e.set_dataset(static_cast<int>(k));
      throw;
    }
    if (d.size() <= n()) {
      InvalidInput e("dataset " + std::to_string(k) + " has " + std::to_string(d.size()) +
                     " samples; need more than n = " + std::to_string(n()));
      e.set_dataset(static_cast<int>(k));
      throw e;
    }
    dof += d.size() - n();
  }
  if (dof < p()) {
    throw InvalidInput("reduced problem is unidentifiable: sum(m_k - n) = " +
                       std::to_string(dof) + " < p = " + std::to_string(p()));
  }
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix g = Matrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    g.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return g;
}

namespace {

void check_alpha(const Vector& alpha, const MultiProblem& problem) {
  if (alpha.size() != problem.p()) {
    throw InvalidInput("alpha has length " + std::to_string(alpha.size()) + ", expected " +
                       std::to_string(problem.p()));
  }
}

// Evaluates the basis and factorizes it, tagging any failure with k.
DatasetCache factor_dataset(const Vector& alpha, const MultiProblem& problem, Index k) {
  const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
  DatasetCache cache;
  try {
    cache.basis = problem.model->eval(alpha, d);
    cache.qr = thin_qr(cache.basis.phi);
  } catch (Error& e) {
    e.set_dataset(static_cast<int>(k));
    throw;
  }
  cache.beta = pinv_apply(*cache.qr, d.y);
  return cache;
}

}  // namespace

ReducedEval eval_gl(const Vector& alpha, const MultiProblem& problem) {
  check_alpha(alpha, problem);
  const Index p = problem.p();

  ReducedEval out;
  out.z.resize(problem.total_rows());
  out.jac.resize(problem.total_rows(), p);
  out.per_dataset.reserve(static_cast<std::size_t>(problem.s()));

  Index off = 0;
  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    DatasetCache cache = factor_dataset(alpha, problem, k);
    const QRFactors& qr = *cache.qr;
    cache.residual = proj_perp_apply(qr, d.y);

    const Index m = d.size();
    out.z.segment(off, m) = cache.residual;
    for (Index l = 0; l < p; ++l) {
      const Matrix& dphi = cache.basis.dphi[static_cast<std::size_t>(l)];
      // -(P^perp dPhi Phi^+ y + (Phi^+)^T dPhi^T P^perp y)
      out.jac.col(l).segment(off, m) =
          -(proj_perp_apply(qr, dphi * cache.beta) +
            pinv_transpose_apply(qr, dphi.transpose() * cache.residual));
    }
    off += m;
    out.per_dataset.push_back(std::move(cache));
  }
  return out;
}

ReducedEval eval_km(const Vector& alpha, const MultiProblem& problem) {
  check_alpha(alpha, problem);
  const Index p = problem.p();
  const Index n = problem.n();
  const Index rows = problem.total_rows() - problem.s() * n;

  ReducedEval out;
  out.z.resize(rows);
  out.jac.resize(rows, p);
  out.per_dataset.reserve(static_cast<std::size_t>(problem.s()));

  Index off = 0;
  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    DatasetCache cache = factor_dataset(alpha, problem, k);
    const QRFactors& qr = *cache.qr;
    cache.residual = d.y - cache.basis.phi * cache.beta;

    const Index len = d.size() - n;
    out.z.segment(off, len) = q2t_apply(qr, d.y);
    for (Index l = 0; l < p; ++l) {
      const Matrix& dphi = cache.basis.dphi[static_cast<std::size_t>(l)];
      out.jac.col(l).segment(off, len) = -q2t_apply(qr, dphi * cache.beta);
    }
    off += len;
    out.per_dataset.push_back(std::move(cache));
  }
  return out;
}

ReducedEval eval_naive(const Vector& alpha, const MultiProblem& problem,
                       const NaiveOptions& options) {
  check_alpha(alpha, problem);
  const Index p = problem.p();
  const Index n = problem.n();
  const Index s = problem.s();
  const Index rows = problem.total_rows();

  const double elements = static_cast<double>(rows) * static_cast<double>(s * n);
  if (elements > options.element_budget) {
    throw TooLarge("block-diagonal matrix would hold " + std::to_string(elements) +
                   " entries, budget is " + std::to_string(options.element_budget));
  }

  ReducedEval out;
  out.per_dataset.resize(static_cast<std::size_t>(s));
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(s));
  for (Index k = 0; k < s; ++k) {
    auto& cache = out.per_dataset[static_cast<std::size_t>(k)];
    try {
      cache.basis = problem.model->eval(alpha, problem.datasets[static_cast<std::size_t>(k)]);
    } catch (Error& e) {
      e.set_dataset(static_cast<int>(k));
      throw;
    }
    blocks.push_back(cache.basis.phi);
  }

  const Matrix g = block_diagonal(blocks);
  QRFactors qr;
  try {
    qr = thin_qr(g);
  } catch (RankDeficient& e) {
    for (Index k = 0; k < s; ++k) {
      if (!thin_qr_any_rank(blocks[static_cast<std::size_t>(k)]).full_rank()) {
        e.set_dataset(static_cast<int>(k));
        break;
      }
    }
    throw;
  }

  const Vector y = problem.stacked_y();
  const Vector beta = pinv_apply(qr, y);
  out.z = proj_perp_apply(qr, y);
  out.jac.resize(rows, p);
  for (Index l = 0; l < p; ++l) {
    std::vector<Matrix> dblocks;
    dblocks.reserve(static_cast<std::size_t>(s));
    for (const auto& cache : out.per_dataset) {
      dblocks.push_back(cache.basis.dphi[static_cast<std::size_t>(l)]);
    }
    const Matrix dg = block_diagonal(dblocks);
    out.jac.col(l) = -(proj_perp_apply(qr, dg * beta) +
                       pinv_transpose_apply(qr, dg.transpose() * out.z));
  }

  Index off = 0;
  for (Index k = 0; k < s; ++k) {
    auto& cache = out.per_dataset[static_cast<std::size_t>(k)];
    const Index m = problem.datasets[static_cast<std::size_t>(k)].size();
    cache.beta = beta.segment(k * n, n);
    cache.residual = out.z.segment(off, m);
    off += m;
  }
  return out;
}

}  // namespace sepvar
