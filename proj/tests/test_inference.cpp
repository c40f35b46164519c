#include "dgwr/inference.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace dgwr;

namespace {

FitConfig
config(double gamma, double bandwidth)
{
  FitConfig c;
  c.gamma = gamma;
  c.kernel = { KernelFamily::Gaussian, bandwidth };
  return c;
}

void
expect_symmetric_psd(const Eigen::MatrixXd& v)
{
  EXPECT_LT((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * std::max(1e-300, v.trace()));
}

} // namespace

TEST(Sandwich, GammaZeroIsClassicalGWR)
{
  const auto data = fixtures::random_dataset(40, 3, 3);
  const auto cfg = config(0.0, 0.35);
  const auto fits = fit_all(data, cfg);
  const auto cov = sandwich_covariance(data, fits, cfg);
  ASSERT_TRUE(cov.failures.empty());
  for (int i : { 0, 13, 39 }) {
    const auto w = oracle::weights(data.coords(), i, 0.35);
    const auto& f = fits[static_cast<std::size_t>(i)];
    // (sum w x x')^-1 (sum w^2 r^2 x x') (sum w x x')^-1
    oracle::Mat bread(3, oracle::Vec(3, 0)), meat(3, oracle::Vec(3, 0));
    for (int j = 0; j < 40; ++j) {
      const oracle::Real r = data.response()(j) - oracle::fitted(data.design(), j, oracle::to_vec(f.beta));
      const oracle::Real wj = w[static_cast<std::size_t>(j)];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const oracle::Real xx = static_cast<oracle::Real>(data.design()(j, a)) * data.design()(j, b);
          bread[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += wj * xx;
          meat[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += wj * wj * r * r * xx;
        }
    }
    const auto inv = oracle::inverse(bread);
    const auto ref = oracle::matmul(oracle::matmul(inv, meat), inv);
    const auto& v = cov.locations[static_cast<std::size_t>(i)]->covariance;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        EXPECT_NEAR(v(a, b), static_cast<double>(ref[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]),
                    1e-10 * std::abs(v(a, a)));
  }
}

TEST(Sandwich, ZeroResidualsGiveZeroCovariance)
{
  auto base = fixtures::random_dataset(12, 2, 4);
  Eigen::VectorXd beta(2);
  beta << 1.0, -2.0;
  const auto data = base.with_response(base.design() * beta);
  LocalEstimate e;
  e.beta = beta;
  e.sigma2 = 1.0;
  const std::vector<LocalEstimate> fits(12, e);
  for (double g : { 0.0, 0.3 }) {
    const auto cov = sandwich_covariance(data, fits, config(g, 0.5));
    for (const auto& loc : cov.locations) {
      ASSERT_TRUE(loc);
      EXPECT_EQ(loc->covariance.cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Sandwich, MicroInstanceMatchesExplicitLoops)
{
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto data = fixtures::random_dataset(6, 2, 60 + seed, 0.2);
    for (double g : { 0.0, 0.2, 0.5 }) {
      auto cfg = config(g, 0.8);
      cfg.min_ess = 0.5;
      const auto fits = fit_all(data, cfg);
      const auto cov = sandwich_covariance(data, fits, cfg);
      for (int i = 0; i < 6; ++i) {
        const auto& f = fits[static_cast<std::size_t>(i)];
        const auto ref = oracle::sandwich(data.design(), data.response(),
                                          oracle::weights(data.coords(), i, 0.8),
                                          { oracle::to_vec(f.beta), f.sigma2 }, g);
        ASSERT_TRUE(cov.locations[static_cast<std::size_t>(i)]);
        const auto& v = cov.locations[static_cast<std::size_t>(i)]->covariance;
        const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            EXPECT_NEAR(v(a, b), static_cast<double>(ref[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]),
                        1e-10 * scale);
        expect_symmetric_psd(v);
      }
    }
  }
}

TEST(Sandwich, SmallGammaContinuity)
{
  const auto data = fixtures::random_dataset(40, 3, 17);
  const auto c0 = config(0.0, 0.4);
  const auto c1 = config(1e-8, 0.4);
  const auto v0 = sandwich_covariance(data, fit_all(data, c0), c0);
  const auto v1 = sandwich_covariance(data, fit_all(data, c1), c1);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& a = v0.locations[i]->covariance;
    const auto& b = v1.locations[i]->covariance;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-4 * a.cwiseAbs().maxCoeff());
  }
}

TEST(Sandwich, SingularJacobianIsLocal)
{
  // point 3 is isolated under a compact kernel: its J has rank one
  Coordinates c(8, 2);
  c << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 0.1, 0.1, 0.05, 0.02, 0.02, 0.07, 0.08, 0.03;
  auto base = fixtures::random_dataset(8, 2, 2);
  SpatialDataset data(c, base.design(), base.response());
  FitConfig cfg;
  cfg.gamma = 0.0;
  cfg.kernel = { KernelFamily::Bisquare, 1.0 };
  cfg.min_ess = 0.5;
  LocalEstimate e;
  e.beta = Eigen::VectorXd::Ones(2);
  e.sigma2 = 1.0;
  const auto cov = sandwich_covariance(data, std::vector<LocalEstimate>(8, e), cfg);
  ASSERT_EQ(cov.failures.size(), 1u);
  EXPECT_EQ(cov.failures[0].location, 3u);
  EXPECT_EQ(cov.failures[0].code, ErrorCode::SingularJacobian);
  EXPECT_FALSE(cov.locations[3]);
  EXPECT_TRUE(cov.locations[0]);
}

TEST(OutlierWeights, ConstantDensitiesGiveOnes)
{
  auto base = fixtures::random_dataset(10, 1, 1);
  const auto data = base.with_response(Eigen::VectorXd::Constant(10, 2.0));
  LocalEstimate e;
  e.beta = Eigen::VectorXd::Constant(1, 1.0);
  e.sigma2 = 1.0;
  const auto d = normalized_outlier_weights(data, std::vector<LocalEstimate>(10, e), 0.4);
  for (Eigen::Index i = 0; i < 10; ++i)
    EXPECT_NEAR(d.U(i), 1.0, 1e-15);
}

TEST(OutlierWeights, SumToNAndScaleInvariant)
{
  const auto data = fixtures::random_dataset(60, 3, 9, 0.1);
  auto cfg = config(0.3, 0.4);
  cfg.tol = 1e-12;
  cfg.max_iter = 5000;
  const auto fits = fit_all(data, cfg);
  const auto d = normalized_outlier_weights(data, fits, 0.3);
  EXPECT_NEAR(d.U.sum(), 60.0, 1e-8 * 60.0);
  EXPECT_GE(d.U.minCoeff(), 0.0);

  const auto scaled = data.with_response(7.0 * data.response());
  const auto ds = normalized_outlier_weights(scaled, fit_all(scaled, cfg), 0.3);
  EXPECT_LT((d.U - ds.U).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(OutlierWeights, WildResidualIsDownweighted)
{
  auto base = fixtures::random_dataset(10, 1, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 1.0);
  y(4) = 11.0;
  const auto data = base.with_response(y);
  LocalEstimate e;
  e.beta = Eigen::VectorXd::Constant(1, 1.0);
  e.sigma2 = 1.0;
  const auto d = normalized_outlier_weights(data, std::vector<LocalEstimate>(10, e), 0.3);
  for (Eigen::Index i = 0; i < 10; ++i) {
    if (i != 4) {
      EXPECT_NEAR(d.U(4) / d.U(i), std::exp(-15.0), 1e-12 * std::exp(-15.0));
    }
  }
  EXPECT_TRUE(d.outlier_flags[4]);
  EXPECT_EQ(std::count(d.outlier_flags.begin(), d.outlier_flags.end(), true), 1);
}

TEST(OutlierWeights, UnderflowIsDegenerate)
{
  auto base = fixtures::random_dataset(5, 1, 1);
  const auto data = base.with_response(Eigen::VectorXd::Constant(5, 1e200));
  LocalEstimate e;
  e.beta = Eigen::VectorXd::Zero(1);
  e.sigma2 = 1e-300;
  try {
    normalized_outlier_weights(data, std::vector<LocalEstimate>(5, e), 1.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DegenerateWeights);
  }
}

TEST(FlagOutliers, ThresholdBehaviour)
{
  Eigen::VectorXd u(4);
  u << 1.0, 0.49, 0.51, 0.5;
  const auto f = flag_outliers(u, 0.5);
  EXPECT_EQ(f, (std::vector<bool>{ false, true, false, false }));
  EXPECT_EQ(flag_outliers(Eigen::VectorXd::Ones(5), 0.5), std::vector<bool>(5, false));
  EXPECT_EQ(flag_outliers(u, 0.0), std::vector<bool>(4, false));
}

TEST(FlagOutliers, MonotoneInThreshold)
{
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(50, 0.0, 2.0);
  for (double t1 = 0.0; t1 < 2.0; t1 += 0.1) {
    const auto a = flag_outliers(u, t1);
    const auto b = flag_outliers(u, t1 + 0.05);
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_TRUE(!a[i] || b[i]);
  }
}

TEST(ConditionNumbers, IdentityAndCollinear)
{
  Coordinates c(4, 2);
  c << 0, 0, 1e3, 0, 0, 1e3, 1e3, 1e3;
  Eigen::MatrixXd x(4, 3);
  x << 1, 1, 0, //
    1, 0, 1,    //
    1, 1, 1,    //
    1, 2, 2;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  SpatialDataset data(c, x, y);
  // only the point itself has weight: moment of (1,0) is singular -> inf
  KernelSpec k{ KernelFamily::Gaussian, 1.0 };
  EXPECT_TRUE(std::isinf(condition_numbers(data, k)(0)));

  // a shared site with rows (1,0), (0,1), (.5,.5): I + 0.25 * ones,
  // eigenvalues 1 and 1.5. No all-ones column, so nothing is dropped.
  Eigen::MatrixXd x3(3, 2);
  x3 << 1, 0, 0, 1, 0.5, 0.5;
  Coordinates c3(3, 2);
  c3 << 0, 0, 0, 0, 0, 0;
  SpatialDataset d3(c3, x3, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(condition_numbers(d3, k)(0), 1.5, 1e-12);

  Eigen::MatrixXd x4(3, 2);
  x4 << 1, 0, 0, 1, 0, 0;
  SpatialDataset d4(c3, x4, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(condition_numbers(d4, k)(0), 1.0, 1e-14);

  const auto base = fixtures::random_dataset(20, 2, 1);
  Eigen::MatrixXd dup(20, 3);
  dup << base.design(), base.design().col(1);
  SpatialDataset d5(base.coords(), dup, base.response());
  for (Eigen::Index i = 0; i < 20; ++i)
    EXPECT_TRUE(std::isinf(condition_numbers(d5, KernelSpec{ KernelFamily::Gaussian, 0.5 })(i)));
}

TEST(ConditionNumbers, AtLeastOneAndRotationInvariant)
{
  const auto data = fixtures::random_dataset(40, 3, 7);
  const KernelSpec k{ KernelFamily::Gaussian, 0.3 };
  const auto cn = condition_numbers(data, k);
  EXPECT_GE(cn.minCoeff(), 1.0);

  const double th = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::MatrixXd x = data.design();
  x.rightCols(2) = data.design().rightCols(2) * rot.transpose();
  SpatialDataset rotated(data.coords(), x, data.response());
  const auto cr = condition_numbers(rotated, k);
  for (Eigen::Index i = 0; i < 40; ++i)
    EXPECT_NEAR(cr(i), cn(i), 1e-9 * cn(i));

  const auto with_intercept = condition_numbers(data, k, true);
  for (Eigen::Index i = 0; i < 40; ++i)
    EXPECT_GE(with_intercept(i), 1.0);
}
