#pragma once

#include "dataset.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "kernel.hpp"
#include "normal.hpp"
#include "parallel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dgwr {

//! Sandwich pieces at one location.
struct LocalCovariance
{
  Eigen::MatrixXd jacobian; // J_i
  Eigen::MatrixXd meat;     // I_i
  Eigen::MatrixXd covariance;
  Eigen::VectorXd standard_errors;
  double jacobian_condition = 0.0;
};

struct CovarianceEstimate
{
  //! Empty where the location failed (see failures).
  std::vector<std::optional<LocalCovariance>> locations;
  std::vector<LocationFailure> failures;
};

namespace detail {

inline double
symmetric_condition(const Eigen::MatrixXd& m)
{
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  if (!(lo > 0.0))
    return std::numeric_limits<double>::infinity();
  return hi / lo;
}

} // namespace detail

//! J_i^{-1} I_i J_i^{-1} for explicit kernel weights.
inline LocalCovariance
sandwich_weighted(const SpatialDataset& data, const Eigen::VectorXd& weights,
                  const LocalEstimate& est, double gamma, std::size_t location)
{
  const Eigen::MatrixXd& x = data.design();
  const Eigen::VectorXd& y = data.response();
  const Eigen::Index n = data.size();
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd log_w = log_weights(weights);

  Eigen::VectorXd j_coef(n);
  Eigen::VectorXd i_coef(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = y(j) - x.row(j).dot(est.beta);
    const double log_wphi =
      log_w(j) + gamma * log_normal_density(y(j), y(j) - r, est.sigma2);
    const double wphi = std::exp(log_wphi);
    j_coef(j) = wphi * (gamma * r * r / est.sigma2 - 1.0);
    i_coef(j) = std::exp(2.0 * log_wphi) * r * r;
  }

  LocalCovariance out;
  out.jacobian = x.transpose() * j_coef.asDiagonal() * x;
  out.meat = x.transpose() * i_coef.asDiagonal() * x;
  out.jacobian_condition = detail::symmetric_condition(out.jacobian);
  if (!(out.jacobian_condition <= 1e12))
    throw LocationError(ErrorCode::SingularJacobian, location,
                        "J is numerically singular (condition " +
                          std::to_string(out.jacobian_condition) + ")");
  const Eigen::MatrixXd j_inv =
    out.jacobian.partialPivLu().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd v = j_inv * out.meat * j_inv.transpose();
  out.covariance = 0.5 * (v + v.transpose());
  out.standard_errors =
    out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

//! Robust covariance of every local beta estimate. A singular J at one
//! location is recorded and does not affect the others.
inline CovarianceEstimate
sandwich_covariance(const SpatialDataset& data,
                    const std::vector<LocalEstimate>& estimates,
                    const FitConfig& config)
{
  config.validate();
  const auto n = static_cast<std::size_t>(data.size());
  if (estimates.size() != n)
    fail(ErrorCode::Input, "need one estimate per location");
  CovarianceEstimate out;
  out.locations.resize(n);
  std::vector<std::optional<LocationFailure>> failures(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      const auto idx = static_cast<Eigen::Index>(i);
      out.locations[i] = sandwich_weighted(
        data, data.weights(config.kernel, idx).weights, estimates[i],
        config.gamma, i);
    } catch (const Error& e) {
      failures[i] = LocationFailure{ i, e.code(), e.what() };
    }
  });
  for (auto& f : failures)
    if (f)
      out.failures.push_back(std::move(*f));
  return out;
}

struct DiagnosticsResult
{
  Eigen::VectorXd U;
  std::vector<bool> outlier_flags;
  Eigen::VectorXd condition_numbers;
  double threshold = 0.5;
};

//! flag_i = U_i < threshold (strict).
inline std::vector<bool>
flag_outliers(const Eigen::VectorXd& u, double threshold = 0.5)
{
  std::vector<bool> flags(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i)
    flags[static_cast<std::size_t>(i)] = u(i) < threshold;
  return flags;
}

inline std::vector<bool>
flag_outliers(const DiagnosticsResult& diag, double threshold)
{
  return flag_outliers(diag.U, threshold);
}

//! U_i = phi_i^gamma / mean_j phi_j^gamma with phi_i evaluated at location
//! i's own fit. Sums to n.
inline DiagnosticsResult
normalized_outlier_weights(const SpatialDataset& data,
                           const std::vector<LocalEstimate>& estimates,
                           double gamma, double threshold = 0.5)
{
  const Eigen::Index n = data.size();
  if (static_cast<Eigen::Index>(estimates.size()) != n)
    fail(ErrorCode::Input, "need one estimate per location");
  const Eigen::VectorXd& y = data.response();
  const Eigen::MatrixXd& x = data.design();

  Eigen::VectorXd log_terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = estimates[static_cast<std::size_t>(i)];
    log_terms(i) =
      gamma * log_normal_density(y(i), x.row(i).dot(e.beta), e.sigma2);
  }
  const double lse = log_sum_exp(log_terms);
  if (!std::isfinite(lse))
    fail(ErrorCode::DegenerateWeights, "every density power underflows");
  const double log_mean = lse - std::log(static_cast<double>(n));

  DiagnosticsResult out;
  out.threshold = threshold;
  out.U = (log_terms.array() - log_mean).exp().matrix();
  out.outlier_flags = flag_outliers(out.U, threshold);
  return out;
}

namespace detail {

inline bool
is_intercept_column(const Eigen::MatrixXd& x, Eigen::Index col)
{
  return (x.col(col).array() == 1.0).all();
}

} // namespace detail

//! lambda_max / lambda_min of sum_j w_ij x_j x_j' at every location. By
//! default a leading all-ones column is dropped so only the covariates
//! enter. Exact collinearity is reported as +inf.
inline Eigen::VectorXd
condition_numbers(const SpatialDataset& data, const KernelSpec& kernel,
                  bool include_intercept = false)
{
  kernel.validate();
  const Eigen::MatrixXd& full = data.design();
  Eigen::MatrixXd x = full;
  if (!include_intercept && full.cols() > 1 && detail::is_intercept_column(full, 0))
    x = full.rightCols(full.cols() - 1);

  const Eigen::Index n = data.size();
  Eigen::VectorXd out(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    const Eigen::VectorXd w = data.weights(kernel, i).weights;
    Eigen::MatrixXd m = x.transpose() * w.asDiagonal() * x;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(hi > 0.0))
      fail(ErrorCode::Input, "weighted moment matrix is zero");
    out(i) = lo <= 1e-14 * hi ? std::numeric_limits<double>::infinity()
                              : hi / lo;
  });
  return out;
}

//! U, flags and condition numbers in one pass.
inline DiagnosticsResult
diagnose(const SpatialDataset& data, const std::vector<LocalEstimate>& estimates,
         double gamma, const KernelSpec& kernel, double threshold = 0.5,
         bool include_intercept = false)
{
  DiagnosticsResult out =
    normalized_outlier_weights(data, estimates, gamma, threshold);
  out.condition_numbers = condition_numbers(data, kernel, include_intercept);
  return out;
}

} // namespace dgwr
