#pragma once

#include "dataset.hpp"
#include "errors.hpp"
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

struct FitConfig
{
  //! Robustness parameter; 0 gives classical GWR.
  double gamma = 0.0;
  KernelSpec kernel;
  int max_iter = 200;
  double tol = 1e-8;
  //! Lower bound for sigma^2. Unset means 1e-12 * var(y).
  std::optional<double> sigma2_floor;
  //! Minimum sum of kernel weights at a location. Unset means p + 1.
  std::optional<double> min_ess;
  //! Keep the objective value after every MM update.
  bool record_trace = false;

  void validate() const
  {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      fail(ErrorCode::Config, "gamma must be finite and >= 0");
    if (!(tol > 0.0))
      fail(ErrorCode::Config, "tol must be positive");
    if (max_iter < 1)
      fail(ErrorCode::Config, "max_iter must be positive");
    if (sigma2_floor && !(*sigma2_floor > 0.0))
      fail(ErrorCode::Config, "sigma2_floor must be positive");
    if (min_ess && !(*min_ess > 0.0))
      fail(ErrorCode::Config, "min_ess must be positive");
    kernel.validate();
  }

  double resolved_sigma2_floor(const SpatialDataset& data) const
  {
    if (sigma2_floor)
      return *sigma2_floor;
    const double v = data.response_variance();
    return v > 0.0 ? 1e-12 * v : 1e-300;
  }

  double resolved_min_ess(const SpatialDataset& data) const
  {
    return min_ess ? *min_ess : static_cast<double>(data.num_covariates() + 1);
  }
};

struct LocalEstimate
{
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
  //! sigma^2 collapsed onto the floor (near-perfect local fit).
  bool perfect_fit = false;
  //! D_i at the estimate for gamma > 0, the weighted log-likelihood L_i
  //! for gamma = 0.
  double final_objective = 0.0;
  //! || sum_j u_j x_j (y_j - x_j'beta) ||_2 with u the normalized density
  //! power weights at the estimate.
  double score_residual = 0.0;
  //! Objective at the start point and after every update (record_trace).
  std::vector<double> objective_trace;
};

//! Normalized MM weights at the current iterate.
struct MMState
{
  Eigen::VectorXd u;
  Eigen::VectorXd beta_current;
  double sigma2_current = 0.0;
};

namespace detail {

inline Eigen::VectorXd
log_density_terms(const SpatialDataset& data, const Eigen::VectorXd& beta,
                  double sigma2)
{
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  const Eigen::VectorXd r = data.response() - data.design() * beta;
  return (log_norm - (0.5 / sigma2) * r.array().square()).matrix();
}

inline void
check_parameters(const SpatialDataset& data, const Eigen::VectorXd& beta,
                 double sigma2)
{
  if (beta.size() != data.num_covariates())
    fail(ErrorCode::Input, "beta has wrong length");
  if (!(sigma2 > 0.0))
    fail(ErrorCode::Input, "sigma2 must be positive");
}

} // namespace detail

//! D_i(beta, sigma^2) for explicit kernel weights, with the additive
//! constant dropped.
inline double
objective_weighted(const SpatialDataset& data,
                   const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                   double sigma2, double gamma)
{
  if (gamma == 0.0)
    fail(ErrorCode::GammaZero,
         "gamma = 0: use log_likelihood_objective instead");
  detail::check_parameters(data, beta, sigma2);
  const Eigen::VectorXd terms =
    log_weights(weights) + gamma * detail::log_density_terms(data, beta, sigma2);
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse))
    fail(ErrorCode::DegenerateObjective,
         "every weighted density power underflows");
  return lse / gamma + gamma / (2.0 * (1.0 + gamma)) * std::log(sigma2);
}

inline double
objective(const SpatialDataset& data, Eigen::Index target,
          const Eigen::VectorXd& beta, double sigma2, const FitConfig& config)
{
  return objective_weighted(data, data.weights(config.kernel, target).weights,
                            beta, sigma2, config.gamma);
}

inline double
log_likelihood_weighted(const SpatialDataset& data,
                        const Eigen::VectorXd& weights,
                        const Eigen::VectorXd& beta, double sigma2)
{
  detail::check_parameters(data, beta, sigma2);
  return weights.dot(detail::log_density_terms(data, beta, sigma2));
}

//! Geographically weighted log-likelihood L_i(beta, sigma^2).
inline double
log_likelihood_objective(const SpatialDataset& data, Eigen::Index target,
                         const Eigen::VectorXd& beta, double sigma2,
                         const FitConfig& config)
{
  return log_likelihood_weighted(
    data, data.weights(config.kernel, target).weights, beta, sigma2);
}

//! u_j proportional to w_j phi(y_j; x_j'beta, sigma^2)^gamma, summing to one.
inline MMState
mm_state(const SpatialDataset& data, const Eigen::VectorXd& log_w,
         const Eigen::VectorXd& beta, double sigma2, double gamma)
{
  MMState state;
  state.beta_current = beta;
  state.sigma2_current = sigma2;
  Eigen::VectorXd terms = log_w;
  if (gamma != 0.0)
    terms += gamma * detail::log_density_terms(data, beta, sigma2);
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse))
    fail(ErrorCode::DegenerateObjective,
         "every weighted density power underflows");
  state.u = (terms.array() - lse).exp().matrix();
  return state;
}

//! (sum u x x')^{-1} sum u x y. Throws SingularMomentMatrix instead of
//! regularizing.
inline Eigen::VectorXd
weighted_least_squares(const SpatialDataset& data, const Eigen::VectorXd& u)
{
  const Eigen::MatrixXd& x = data.design();
  const Eigen::MatrixXd moment = x.transpose() * u.asDiagonal() * x;
  const Eigen::VectorXd rhs = x.transpose() * u.cwiseProduct(data.response());
  Eigen::LLT<Eigen::MatrixXd> llt(moment);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
    fail(ErrorCode::SingularMomentMatrix,
         "weighted moment matrix is singular");
  return llt.solve(rhs);
}

//! Normalized residual of the weighted estimating equation
//! || sum_j w_j phi_j^gamma x_j r_j || / sum_j w_j phi_j^gamma.
inline double
estimating_equation_residual(const SpatialDataset& data,
                             const Eigen::VectorXd& weights,
                             const Eigen::VectorXd& beta, double sigma2,
                             double gamma)
{
  const MMState s = mm_state(data, log_weights(weights), beta, sigma2, gamma);
  const Eigen::VectorXd r = data.response() - data.design() * beta;
  return (data.design().transpose() * s.u.cwiseProduct(r)).norm();
}

//! MM fit with explicit kernel weights. `location` is only used to label
//! errors. Leave-one-out fits pass weights with the held-out entry zeroed.
inline LocalEstimate
mm_fit_weighted(const SpatialDataset& data, const Eigen::VectorXd& weights,
                const FitConfig& config, const std::optional<LocalEstimate>& init,
                std::size_t location)
{
  config.validate();
  const double gamma = config.gamma;
  const double floor = config.resolved_sigma2_floor(data);
  const double ess = weights.sum();
  if (!(ess >= config.resolved_min_ess(data)))
    throw LocationError(ErrorCode::InsufficientEffectiveSampleSize, location,
                        "effective sample size " + std::to_string(ess) +
                          " below minimum " +
                          std::to_string(config.resolved_min_ess(data)));

  const Eigen::VectorXd log_w = log_weights(weights);
  const Eigen::VectorXd& y = data.response();
  const Eigen::MatrixXd& x = data.design();

  auto wls = [&](const Eigen::VectorXd& u) {
    try {
      return weighted_least_squares(data, u);
    } catch (const Error& e) {
      throw LocationError(e.code(), location, e.what());
    }
  };
  auto state_at = [&](const Eigen::VectorXd& beta, double sigma2) {
    try {
      return mm_state(data, log_w, beta, sigma2, gamma);
    } catch (const Error& e) {
      throw LocationError(e.code(), location, e.what());
    }
  };
  auto value_at = [&](const Eigen::VectorXd& beta, double sigma2) {
    if (gamma == 0.0)
      return log_likelihood_weighted(data, weights, beta, sigma2);
    try {
      return objective_weighted(data, weights, beta, sigma2, gamma);
    } catch (const Error& e) {
      throw LocationError(e.code(), location, e.what());
    }
  };

  LocalEstimate est;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  bool hit_floor = false;

  if (gamma == 0.0 || !init) {
    // Classical GWR: one weighted least-squares update with u = w / sum w.
    const Eigen::VectorXd u = weights / ess;
    beta = wls(u);
    const Eigen::VectorXd r = y - x * beta;
    sigma2 = u.dot(r.cwiseProduct(r));
    if (!(sigma2 >= floor)) {
      sigma2 = floor;
      hit_floor = true;
    }
    if (gamma == 0.0) {
      est.beta = beta;
      est.sigma2 = sigma2;
      est.iterations = 1;
      est.converged = !hit_floor;
      est.perfect_fit = hit_floor;
      est.final_objective = value_at(beta, sigma2);
      est.score_residual = (x.transpose() * u.cwiseProduct(r)).norm();
      if (config.record_trace)
        est.objective_trace.push_back(est.final_objective);
      return est;
    }
  } else {
    beta = init->beta;
    sigma2 = std::max(init->sigma2, floor);
    if (beta.size() != x.cols())
      fail(ErrorCode::Input, "initial beta has wrong length");
  }

  if (config.record_trace)
    est.objective_trace.push_back(value_at(beta, sigma2));

  int it = 0;
  bool converged = false;
  while (!hit_floor && it < config.max_iter) {
    const MMState state = state_at(beta, sigma2);
    const Eigen::VectorXd beta_next = wls(state.u);
    const Eigen::VectorXd r = y - x * beta_next;
    double sigma2_next = (1.0 + gamma) * state.u.dot(r.cwiseProduct(r));
    if (!(sigma2_next >= floor)) {
      sigma2_next = floor;
      hit_floor = true;
    }
    ++it;
    const double beta_scale = 1.0 + beta_next.lpNorm<Eigen::Infinity>();
    const double change =
      std::max((beta_next - beta).lpNorm<Eigen::Infinity>() / beta_scale,
               std::abs(sigma2_next - sigma2) / (1.0 + sigma2_next));
    beta = beta_next;
    sigma2 = sigma2_next;
    if (config.record_trace)
      est.objective_trace.push_back(value_at(beta, sigma2));
    if (change < config.tol) {
      converged = true;
      break;
    }
  }

  est.beta = beta;
  est.sigma2 = sigma2;
  est.iterations = it;
  est.perfect_fit = hit_floor;
  est.converged = converged && !hit_floor;
  est.final_objective = value_at(beta, sigma2);
  {
    const MMState final_state = state_at(beta, sigma2);
    const Eigen::VectorXd r = y - x * beta;
    est.score_residual = (x.transpose() * final_state.u.cwiseProduct(r)).norm();
  }
  return est;
}

//! Robust local fit at one location. Without `init`, starts from the
//! classical GWR fit at the same bandwidth.
inline LocalEstimate
mm_fit_location(const SpatialDataset& data, Eigen::Index target,
                const FitConfig& config,
                const std::optional<LocalEstimate>& init = std::nullopt)
{
  if (target < 0 || target >= data.size())
    fail(ErrorCode::Input, "target index out of range");
  return mm_fit_weighted(data, data.weights(config.kernel, target).weights,
                         config, init, static_cast<std::size_t>(target));
}

//! Fits every location; throws the LocationError of the lowest failing
//! index.
inline std::vector<LocalEstimate>
fit_all(const SpatialDataset& data, const FitConfig& config,
        const std::vector<LocalEstimate>* inits = nullptr)
{
  config.validate();
  const auto n = static_cast<std::size_t>(data.size());
  std::vector<LocalEstimate> out(n);
  parallel_for(n, [&](std::size_t i) {
    std::optional<LocalEstimate> init;
    if (inits)
      init = (*inits)[i];
    out[i] = mm_fit_location(data, static_cast<Eigen::Index>(i), config, init);
  });
  return out;
}

struct LocationFailure
{
  std::size_t location = 0;
  ErrorCode code = ErrorCode::Numerical;
  std::string message;
};

struct FitAllReport
{
  std::vector<std::optional<LocalEstimate>> estimates;
  std::vector<LocationFailure> failures;

  bool ok() const { return failures.empty(); }
};

//! Like fit_all but records per-location failures instead of throwing.
inline FitAllReport
fit_all_collect(const SpatialDataset& data, const FitConfig& config)
{
  config.validate();
  const auto n = static_cast<std::size_t>(data.size());
  FitAllReport report;
  report.estimates.resize(n);
  std::vector<std::optional<LocationFailure>> failures(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      report.estimates[i] =
        mm_fit_location(data, static_cast<Eigen::Index>(i), config);
    } catch (const Error& e) {
      failures[i] = LocationFailure{ i, e.code(), e.what() };
    }
  });
  for (auto& f : failures)
    if (f)
      report.failures.push_back(std::move(*f));
  return report;
}

//! Coefficient surface as an n x p matrix (row i = beta_i).
inline Eigen::MatrixXd
coefficient_matrix(const std::vector<LocalEstimate>& estimates)
{
  if (estimates.empty())
    return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(estimates.size()),
                      estimates.front().beta.size());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = estimates[i].beta.transpose();
  return out;
}

} // namespace dgwr
