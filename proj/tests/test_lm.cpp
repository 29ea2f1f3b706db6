#include "sepvar/lm.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sepvar {
namespace {

Vector rosenbrock(const Vector& x) { return (Vector(2) << 1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])).finished(); }

Matrix rosenbrock_jac(const Vector& x) { return (Matrix(2, 2) << -1.0, 0.0, -20.0 * x[0], 10.0).finished(); }

TEST(LmConfig, Validation) {
  LMConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.ftol = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.lambda_up = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.lambda_down = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(LmSolve, LinearResidualOneStep) {
  const Vector c = (Vector(3) << 1.5, -2.0, 0.25).finished();
  LMConfig cfg;
  cfg.lambda0 = 0.0;
  const LMReport rep = lm_solve([&](const Vector& x) { return Vector(x - c); },
                                [](const Vector& x) { return Matrix(Matrix::Identity(x.size(), x.size())); },
                                Vector::Zero(3), cfg);
  EXPECT_TRUE(rep.converged());
  EXPECT_EQ(rep.cost_history.size(), 2u);
  EXPECT_LT((rep.x_final - c).norm(), 1e-12);
}

TEST(LmSolve, GaussNewtonStepSolvesLinearLeastSquares) {
  Matrix a(5, 2);
  a << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
  const Vector b = (Vector(5) << 0.1, 0.9, 2.2, 2.9, 4.1).finished();
  const Vector oracle = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  LMConfig cfg;
  cfg.lambda0 = 0.0;
  cfg.max_iter = 1;
  const LMReport rep = lm_solve([&](const Vector& x) { return Vector(a * x - b); },
                                [&](const Vector&) { return a; }, Vector::Zero(2), cfg);
  EXPECT_LT((rep.x_final - oracle).norm() / oracle.norm(), 1e-10);
}

TEST(LmSolve, Rosenbrock) {
  const LMReport rep = lm_solve(rosenbrock, rosenbrock_jac, (Vector(2) << -1.2, 1.0).finished());
  EXPECT_TRUE(rep.converged());
  EXPECT_LT((rep.x_final - Vector::Ones(2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LmSolve, ZeroResidualAtStart) {
  int calls = 0;
  const Vector x0 = Vector::Ones(2);
  const LMReport rep = lm_solve(
      [&](const Vector& x) {
        ++calls;
        return rosenbrock(x);
      },
      rosenbrock_jac, x0);
  EXPECT_EQ(rep.status, LMStatus::ConvergedGtol);
  EXPECT_EQ(rep.n_feval, 1);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(rep.x_final, x0);
}

TEST(LmSolve, CostHistoryNonIncreasing) {
  LMConfig cfg;
  cfg.record_iterates = true;
  const LMReport rep = lm_solve(rosenbrock, rosenbrock_jac, (Vector(2) << -1.2, 1.0).finished(), cfg);
  ASSERT_GE(rep.cost_history.size(), 2u);
  for (std::size_t i = 1; i < rep.cost_history.size(); ++i) {
    EXPECT_LE(rep.cost_history[i], rep.cost_history[i - 1]);
  }
  EXPECT_EQ(rep.iterates.size(), rep.cost_history.size());
  EXPECT_GE(rep.n_feval, static_cast<int>(rep.cost_history.size()));
}

TEST(LmSolve, IteratesInvariantUnderResidualScaling) {
  LMConfig cfg;
  cfg.record_iterates = true;
  const Vector x0 = (Vector(2) << -1.2, 1.0).finished();
  const LMReport base = lm_solve(rosenbrock, rosenbrock_jac, x0, cfg);
  const double c = 2.0;
  const LMReport scaled = lm_solve([&](const Vector& x) { return Vector(c * rosenbrock(x)); },
                                   [&](const Vector& x) { return Matrix(c * rosenbrock_jac(x)); }, x0, cfg);
  ASSERT_EQ(base.iterates.size(), scaled.iterates.size());
  for (std::size_t i = 0; i < base.iterates.size(); ++i) {
    EXPECT_LT((base.iterates[i] - scaled.iterates[i]).norm(), 1e-12 * (1.0 + base.iterates[i].norm())) << i;
  }
}

TEST(LmSolve, ExponentialFit) {
  const Vector t = Vector::LinSpaced(20, 0.0, 4.0);
  const Vector y = (2.0 * (-0.7 * t.array()).exp()).matrix();
  const auto res = [&](const Vector& x) { return Vector((x[0] * (-x[1] * t.array()).exp()).matrix() - y); };
  const auto jac = [&](const Vector& x) {
    Matrix j(t.size(), 2);
    j.col(0) = (-x[1] * t.array()).exp().matrix();
    j.col(1) = (-x[0] * t.array() * (-x[1] * t.array()).exp()).matrix();
    return j;
  };
  const LMReport rep = lm_solve(res, jac, (Vector(2) << 1.0, 0.2).finished());
  EXPECT_TRUE(rep.converged());
  EXPECT_NEAR(rep.x_final[0], 2.0, 1e-8);
  EXPECT_NEAR(rep.x_final[1], 0.7, 1e-8);
}

TEST(LmSolve, NonFiniteInitialResidualThrows) {
  const auto res = [](const Vector& x) { return Vector(x.array().log().matrix()); };
  const auto jac = [](const Vector& x) { return Matrix(x.cwiseInverse().asDiagonal()); };
  try {
    lm_solve(res, jac, (Vector(1) << -1.0).finished());
    FAIL() << "expected failed evaluation";
  } catch (const EvaluationFailed& e) {
    EXPECT_EQ(e.iterate()[0], -1.0);
  }
}

TEST(LmSolve, NonFiniteTrialIsRejected) {
  // Residual undefined for x < 0; the first undamped step overshoots there.
  const auto res = [](const Vector& x) {
    Vector r(1);
    r[0] = x[0] < 0.0 ? NAN : std::sqrt(x[0]) - 0.1;
    return r;
  };
  const auto jac = [](const Vector& x) { return Matrix::Constant(1, 1, 0.5 / std::sqrt(x[0])); };
  LMConfig cfg;
  cfg.lambda0 = 0.0;
  const LMReport rep = lm_solve(res, jac, (Vector(1) << 4.0).finished(), cfg);
  EXPECT_TRUE(rep.converged());
  EXPECT_NEAR(rep.x_final[0], 0.01, 1e-8);
}

TEST(LmSolve, NonFiniteJacobianThrows) {
  const auto res = [](const Vector& x) { return Vector(x); };
  const auto jac = [](const Vector&) { return Matrix::Constant(1, 1, INFINITY); };
  EXPECT_THROW(lm_solve(res, jac, Vector::Ones(1)), EvaluationFailed);
}

TEST(LmSolve, ShapeMismatchThrows) {
  const auto res = [](const Vector& x) { return Vector(x); };
  const auto jac = [](const Vector&) { return Matrix(Matrix::Identity(2, 3)); };
  EXPECT_THROW(lm_solve(res, jac, Vector::Ones(2)), InvalidInput);
  EXPECT_THROW(lm_solve(res, jac, (Vector(1) << NAN).finished()), InvalidInput);
}

TEST(LmSolve, MaxIterReported) {
  LMConfig cfg;
  cfg.max_iter = 2;
  const LMReport rep = lm_solve(rosenbrock, rosenbrock_jac, (Vector(2) << -1.2, 1.0).finished(), cfg);
  EXPECT_EQ(rep.status, LMStatus::MaxIter);
  EXPECT_EQ(rep.n_iter, 2);
  EXPECT_FALSE(rep.converged());
}

TEST(LmSolve, StatusNames) {
  EXPECT_EQ(to_string(LMStatus::ConvergedFtol), "converged-ftol");
  EXPECT_EQ(to_string(LMStatus::ConvergedXtol), "converged-xtol");
  EXPECT_EQ(to_string(LMStatus::ConvergedGtol), "converged-gtol");
  EXPECT_EQ(to_string(LMStatus::MaxIter), "max-iter");
  EXPECT_EQ(to_string(LMStatus::FailedLinearSolve), "failed-linear-solve");
}

}  // namespace
}  // namespace sepvar
