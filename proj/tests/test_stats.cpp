#include "sepvar/solver.hpp"
#include "sepvar/stats.hpp"
#include "sepvar/synth.hpp"

#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <gtest/gtest.h>

#include <numeric>

namespace sepvar {
namespace {

SolverConfig config(Method m) {
  SolverConfig cfg;
  cfg.method = m;
  return cfg;
}

TEST(Sigma, Examples) {
  EXPECT_EQ(sigma_of_regression(Vector::Zero(7), 7, 2, 2, 1), 0.0);
  EXPECT_DOUBLE_EQ(sigma_of_regression((Vector(2) << 3.0, 4.0).finished(), 2, 0, 0, 0), 5.0 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(sigma_of_regression(Vector::Ones(10), 10, 3, 2, 2), std::sqrt(10.0 / 2.0));
  EXPECT_THROW(sigma_of_regression(Vector::Ones(8), 8, 3, 2, 2), InvalidInput);
  EXPECT_THROW(sigma_of_regression(Vector::Ones(8), 9, 1, 1, 1), InvalidInput);
}

TEST(RScore, Examples) {
  const Vector y = (Vector(4) << 1.0, 3.0, 2.0, 6.0).finished();
  EXPECT_DOUBLE_EQ(r_score(y, y), 1.0);
  EXPECT_EQ(r_score(y, Vector::Constant(4, y.mean())), 0.0);
  // Regression-sum ratio: an overshooting prediction exceeds 1.
  const Vector wide = (y.array() - y.mean()) * 2.0 + y.mean();
  EXPECT_DOUBLE_EQ(r_score(y, wide), 4.0);
  EXPECT_THROW(r_score(Vector::Ones(3), Vector::Ones(3)), InvalidInput);
  EXPECT_THROW(r_score(y, Vector::Ones(3)), InvalidInput);
}

TEST(RelativeError, Examples) {
  const Vector truth = (Vector(2) << 2.0, -4.0).finished();
  EXPECT_EQ(relative_error(truth, truth), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(relative_error(truth, (Vector(2) << 1.0, -4.0).finished())[0], 0.5);
  EXPECT_THROW(relative_error((Vector(1) << 0.0).finished(), Vector::Ones(1)), InvalidInput);
  EXPECT_THROW(relative_error(truth, Vector::Ones(3)), InvalidInput);
}

TEST(Quantile, NinetyFivePercent) {
  EXPECT_NEAR(normal_quantile(0.95), 1.959963984540054, 1e-9);
  EXPECT_NEAR(normal_quantile(0.6826894921370859), 1.0, 1e-9);
  EXPECT_THROW(normal_quantile(1.0), InvalidInput);
}

TEST(Covariance, OrthonormalColumns) {
  std::mt19937_64 rng(1);
  const Matrix q = Eigen::HouseholderQR<Matrix>(testing::random_matrix(9, 4, rng)).householderQ() *
                   Matrix::Identity(9, 4);
  bool warn = true;
  const Matrix c = covariance(q, 1.0, &warn);
  EXPECT_FALSE(warn);
  EXPECT_LT((c - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  const Vector b = confidence_bounds(c);
  EXPECT_LT((b.array() - 1.959963984540054).abs().maxCoeff(), 1e-9);
  EXPECT_EQ(confidence_bounds(covariance(q, 0.0)), Vector::Zero(4));
}

TEST(Covariance, MatchesExplicitInverse) {
  std::mt19937_64 rng(2);
  const Matrix h = testing::random_matrix(12, 5, rng);
  const Matrix oracle = 0.3 * 0.3 * (h.transpose() * h).inverse();
  EXPECT_LT(testing::rel_fro(covariance(h, 0.3), oracle), 1e-10);
}

TEST(Covariance, RankDeficientIsFlagged) {
  Matrix h(6, 3);
  h.col(0) = Vector::LinSpaced(6, 0, 1);
  h.col(1) = Vector::Ones(6);
  h.col(2) = h.col(0) + h.col(1);
  bool warn = false;
  const Matrix c = covariance(h, 1.0, &warn);
  EXPECT_TRUE(warn);
  EXPECT_TRUE(c.allFinite());
  Matrix bad = h;
  bad(0, 0) = NAN;
  EXPECT_THROW(covariance(bad, 1.0), InvalidInput);
  EXPECT_THROW(confidence_bounds(Matrix::Constant(1, 1, INFINITY)), InvalidInput);
}

TEST(BuildH, PureLinearModelIsBlockDiagonal) {
  std::mt19937_64 rng(3);
  MultiProblem prob;
  prob.model = std::make_shared<BeerModel>(3, 0);
  for (Index m : {20, 25}) {
    Dataset d = testing::beer_dataset(m, 0, 0.2, rng);
    d.y = prob.model->eval(Vector(0), d).phi * Vector::Ones(3) + 0.01 * testing::random_vector(m, rng);
    prob.datasets.push_back(std::move(d));
  }
  const FitResult r = fit(prob, config(Method::VpGolubLeVeque), Vector(0));
  const Matrix h = build_H(r, prob);
  ASSERT_EQ(h.cols(), 6);
  const Matrix phi0 = prob.model->eval(Vector(0), prob.datasets[0]).phi;
  const Matrix phi1 = prob.model->eval(Vector(0), prob.datasets[1]).phi;
  EXPECT_EQ(h, block_diagonal({phi0, phi1}));
  const Matrix c = r.diagnostics->covariance;
  EXPECT_LT(c.topRightCorner(3, 3).cwiseAbs().maxCoeff(), 1e-12 * c.cwiseAbs().maxCoeff());
  const double s2 = r.diagnostics->sigma * r.diagnostics->sigma;
  EXPECT_LT(testing::rel_fro(c.topLeftCorner(3, 3), s2 * (phi0.transpose() * phi0).inverse()), 1e-10);
}

TEST(BuildH, SingleDatasetAndFiniteDifferences) {
  const SyntheticProblem sp = generate(exp_truth(1, (Vector(2) << 0.5, 2.0).finished(), 100.0, 4));
  const FitResult r = fit(sp.problem, config(Method::VpKaufman), 1.1 * sp.truth.alpha_true);
  const Matrix h = build_H(r, sp.problem);
  ASSERT_EQ(h.cols(), 4);
  EXPECT_EQ(h.rightCols(2), eval_exp_basis(r.alpha_hat, sp.problem.datasets[0]).phi);
  const Matrix fd = testing::central_diff([&](const Vector& a) { return eval_gl(a, sp.problem).z; }, r.alpha_hat);
  EXPECT_LT(testing::rel_fro(h.leftCols(2), fd), 1e-6);
}

TEST(Diagnose, SigmaTracksNoiseScale) {
  const double snr = 100.0;
  const SyntheticProblem sp = generate(frame_truth(4, snr, 5));
  const FitResult r = fit(sp.problem, config(Method::VpGolubLeVeque), Vector::Ones(2));
  double sum = 0.0;
  Index count = 0;
  for (const auto& c : sp.clean) {
    sum += c.sum();
    count += c.size();
  }
  const double expected = sum / static_cast<double>(count) / snr;
  EXPECT_NEAR(r.diagnostics->sigma / expected, 1.0, 0.2);
}

TEST(Diagnose, RScoreNearOneAtSnr200) {
  const SyntheticProblem sp = generate(frame_truth(4, 200.0, 6));
  const FitResult r = fit(sp.problem, config(Method::VpGolubLeVeque), Vector::Ones(2));
  EXPECT_NEAR(r.diagnostics->r_score, 0.99, 0.01);
}

TEST(Diagnose, SigmaEqualAcrossMethods) {
  const SyntheticProblem sp = generate(frame_truth(4, 200.0, 7));
  const double reference = fit(sp.problem, config(Method::VpGolubLeVeque), Vector::Ones(2)).diagnostics->sigma;
  for (Method m : kAllMethods) {
    EXPECT_NEAR(fit(sp.problem, config(m), Vector::Ones(2)).diagnostics->sigma, reference, 1e-10 * reference)
        << to_string(m);
  }
}

TEST(Diagnose, CovariancePsdAndBoundsNonNegative) {
  const SyntheticProblem sp = generate(frame_truth(4, 100.0, 8));
  const FitResult r = fit(sp.problem, config(Method::VpKaufman), Vector::Ones(2));
  const Matrix& c = r.diagnostics->covariance;
  ASSERT_EQ(c.rows(), 2 + 4 * 3);
  EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-10 * c.cwiseAbs().maxCoeff());
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(c).eigenvalues();
  EXPECT_GE(eig.minCoeff(), -1e-10 * eig.maxCoeff());
  EXPECT_GE(r.diagnostics->conf_bounds.minCoeff(), 0.0);
  EXPECT_FALSE(r.diagnostics->rank_warning);
}

TEST(Diagnose, BoundsPermuteWithDatasets) {
  const SyntheticProblem sp = generate(frame_truth(3, 100.0, 9));
  MultiProblem swapped = sp.problem;
  std::swap(swapped.datasets[0], swapped.datasets[2]);
  const Vector a = fit(sp.problem, config(Method::VpGolubLeVeque), Vector::Ones(2)).diagnostics->conf_bounds;
  const Vector b = fit(swapped, config(Method::VpGolubLeVeque), Vector::Ones(2)).diagnostics->conf_bounds;
  EXPECT_LT((a.head(2) - b.head(2)).norm(), 1e-6 * a.head(2).norm());
  EXPECT_LT((a.segment(2, 3) - b.segment(8, 3)).norm(), 1e-6 * a.segment(2, 3).norm());
  EXPECT_LT((a.segment(5, 3) - b.segment(5, 3)).norm(), 1e-6 * a.segment(5, 3).norm());
  EXPECT_LT((a.segment(8, 3) - b.segment(2, 3)).norm(), 1e-6 * a.segment(8, 3).norm());
}

TEST(Diagnose, RelativeErrorUnbiasedAtSnr100) {
  const int seeds = 40;
  std::vector<double> err;
  for (int i = 0; i < seeds; ++i) {
    const SyntheticProblem sp = generate(frame_truth(2, 100.0, stream_seed(77, static_cast<std::uint64_t>(i))));
    const FitResult r = fit(sp.problem, config(Method::VpKaufman), Vector::Ones(2));
    err.push_back(relative_error(sp.truth.alpha_true, r.alpha_hat)[0]);
  }
  const double mean = std::accumulate(err.begin(), err.end(), 0.0) / seeds;
  double var = 0.0;
  for (double e : err) var += (e - mean) * (e - mean);
  const double sd = std::sqrt(var / (seeds - 1));
  EXPECT_LT(std::abs(mean), 3.0 * sd / std::sqrt(static_cast<double>(seeds)));
}

}  // namespace
}  // namespace sepvar
