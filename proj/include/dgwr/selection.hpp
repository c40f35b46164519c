#pragma once

#include "dataset.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "kernel.hpp"
#include "normal.hpp"
#include "parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dgwr {

//! {0, 0.01, 0.03, 0.05, 0.1, 0.15, ..., 0.5}
inline std::vector<double>
default_gamma_grid()
{
  std::vector<double> g{ 0.0, 0.01, 0.03, 0.05 };
  for (int k = 2; k <= 10; ++k)
    g.push_back(0.05 * k);
  return g;
}

struct TuningGrid
{
  std::vector<double> gammas;
  std::vector<double> bandwidths;

  static TuningGrid defaults(const Coordinates& coords, int levels = 10)
  {
    return { default_gamma_grid(), bandwidth_grid(coords, levels) };
  }

  void validate() const
  {
    if (gammas.empty() || bandwidths.empty())
      fail(ErrorCode::Config, "tuning grids must be non-empty");
    for (double g : gammas)
      if (!(g >= 0.0) || !std::isfinite(g))
        fail(ErrorCode::Config, "gamma grid entries must be finite and >= 0");
    for (double b : bandwidths)
      if (!(b > 0.0) || !std::isfinite(b))
        fail(ErrorCode::Config, "bandwidth grid entries must be positive");
  }
};

struct SkippedPoint
{
  //! "gamma" or "bandwidth"
  std::string parameter;
  double value = 0.0;
  ErrorCode code = ErrorCode::Numerical;
  std::string reason;
};

struct SelectionResult
{
  double gamma_opt = 0.0;
  double b_opt = 0.0;
  //! (gamma, H(gamma; b_L)) for every non-skipped gamma, ascending.
  std::vector<std::pair<double, double>> hscore_trace;
  //! (b, RCV(b; gamma_opt)) for every non-skipped b, ascending.
  std::vector<std::pair<double, double>> rcv_trace;
  std::vector<SkippedPoint> skipped;
};

//! Leave-one-out fits: location i is fitted with its own kernel weight set
//! to zero. `warm` (typically the full-data fits) seeds the MM iterations.
inline std::vector<LocalEstimate>
loo_fits(const SpatialDataset& data, const FitConfig& config,
         const std::vector<LocalEstimate>* warm = nullptr)
{
  config.validate();
  const auto n = static_cast<std::size_t>(data.size());
  std::vector<LocalEstimate> out(n);
  parallel_for(n, [&](std::size_t i) {
    const auto idx = static_cast<Eigen::Index>(i);
    Eigen::VectorXd w = data.weights(config.kernel, idx).weights;
    w(idx) = 0.0;
    std::optional<LocalEstimate> init;
    if (warm)
      init = (*warm)[i];
    out[i] = mm_fit_weighted(data, w, config, init, i);
  });
  return out;
}

//! Robust cross-validation criterion from precomputed leave-one-out fits.
//! gamma = 0 uses the negative leave-one-out sum of squares.
inline double
rcv_from_loo(const SpatialDataset& data, double gamma,
             const std::vector<LocalEstimate>& loo)
{
  const Eigen::Index n = data.size();
  if (static_cast<Eigen::Index>(loo.size()) != n)
    fail(ErrorCode::Input, "need one leave-one-out fit per location");
  const Eigen::VectorXd& y = data.response();
  const Eigen::MatrixXd& x = data.design();

  if (gamma == 0.0) {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y(i) - x.row(i).dot(loo[i].beta);
      sse += r * r;
    }
    return -sse;
  }

  Eigen::VectorXd terms(n);
  double sigma2_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = loo[static_cast<std::size_t>(i)];
    terms(i) = gamma * log_normal_density(y(i), x.row(i).dot(e.beta), e.sigma2);
    sigma2_sum += e.sigma2;
  }
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse))
    fail(ErrorCode::DegenerateObjective,
         "every leave-one-out density power underflows");
  return lse / gamma + gamma / (2.0 * (1.0 + gamma)) * std::log(sigma2_sum);
}

inline double
rcv(const SpatialDataset& data, const FitConfig& config,
    const std::vector<LocalEstimate>* warm = nullptr)
{
  return rcv_from_loo(data, config.gamma, loo_fits(data, config, warm));
}

//! Asymptotic Hyvarinen score from full-data fits; smaller is better.
inline double
hyvarinen_from_fits(const SpatialDataset& data, double gamma,
                    const std::vector<LocalEstimate>& fits)
{
  const Eigen::Index n = data.size();
  if (static_cast<Eigen::Index>(fits.size()) != n)
    fail(ErrorCode::Input, "need one fit per location");
  const Eigen::VectorXd& y = data.response();
  const Eigen::MatrixXd& x = data.design();
  double h = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = fits[static_cast<std::size_t>(i)];
    const double mean = x.row(i).dot(e.beta);
    const double r2 = (y(i) - mean) * (y(i) - mean);
    const double w =
      gamma == 0.0 ? 1.0 : std::exp(gamma * log_normal_density(y(i), mean, e.sigma2));
    h += (2.0 * (gamma * r2 - e.sigma2) * w + r2 * w * w) / (e.sigma2 * e.sigma2);
  }
  return h;
}

inline double
hyvarinen_score(const SpatialDataset& data, const FitConfig& config)
{
  std::vector<LocalEstimate> fits;
  try {
    fits = fit_all(data, config);
  } catch (const Error& e) {
    fail(ErrorCode::ScoreUnavailable,
         std::string("Hyvarinen score unavailable: ") + e.what());
  }
  return hyvarinen_from_fits(data, config.gamma, fits);
}

namespace detail {

inline std::vector<double>
sorted_unique(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

} // namespace detail

//! gamma = argmin_gamma H(gamma; b_L) at the largest bandwidth b_L.
//! Ties go to the smaller gamma.
inline void
select_gamma(const SpatialDataset& data, const std::vector<double>& gammas,
             double b_largest, const FitConfig& base, SelectionResult& result)
{
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double g : detail::sorted_unique(gammas)) {
    FitConfig cfg = base;
    cfg.gamma = g;
    cfg.kernel.bandwidth = b_largest;
    try {
      const double h = hyvarinen_score(data, cfg);
      if (!std::isfinite(h))
        fail(ErrorCode::ScoreUnavailable, "non-finite Hyvarinen score");
      result.hscore_trace.emplace_back(g, h);
      if (!found || h < best) {
        best = h;
        result.gamma_opt = g;
        found = true;
      }
    } catch (const Error& e) {
      result.skipped.push_back({ "gamma", g, e.code(), e.what() });
    }
  }
  if (!found)
    fail(ErrorCode::SelectionFailed,
         "every gamma candidate was skipped (" +
           std::to_string(result.skipped.size()) + " points)");
}

//! b = argmax_b RCV(b; gamma) with leave-one-out fits warm-started from the
//! full fit at each b. Ties go to the larger b.
inline void
select_bandwidth(const SpatialDataset& data,
                 const std::vector<double>& bandwidths, double gamma,
                 const FitConfig& base, SelectionResult& result)
{
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double b : detail::sorted_unique(bandwidths)) {
    FitConfig cfg = base;
    cfg.gamma = gamma;
    cfg.kernel.bandwidth = b;
    try {
      double value = 0.0;
      if (gamma == 0.0) {
        value = rcv(data, cfg);
      } else {
        const auto full = fit_all(data, cfg);
        value = rcv(data, cfg, &full);
      }
      if (!std::isfinite(value))
        fail(ErrorCode::DegenerateObjective, "non-finite RCV");
      result.rcv_trace.emplace_back(b, value);
      if (!found || value >= best) {
        best = value;
        result.b_opt = b;
        found = true;
      }
    } catch (const Error& e) {
      result.skipped.push_back({ "bandwidth", b, e.code(), e.what() });
    }
  }
  if (!found)
    fail(ErrorCode::SelectionFailed, "every bandwidth candidate was skipped");
}

//! Two-step selection: gamma by Hyvarinen score at the largest bandwidth,
//! then the bandwidth by robust cross-validation at that gamma.
inline SelectionResult
select(const SpatialDataset& data, const TuningGrid& grid,
       const FitConfig& base)
{
  grid.validate();
  SelectionResult result;
  const double b_largest =
    *std::max_element(grid.bandwidths.begin(), grid.bandwidths.end());
  select_gamma(data, grid.gammas, b_largest, base, result);
  select_bandwidth(data, grid.bandwidths, result.gamma_opt, base, result);
  return result;
}

//! Classical GWR bandwidth: maximizes -LOO-SSE at gamma = 0.
inline SelectionResult
select_gwr_bandwidth(const SpatialDataset& data,
                     const std::vector<double>& bandwidths,
                     const FitConfig& base)
{
  SelectionResult result;
  result.gamma_opt = 0.0;
  select_bandwidth(data, bandwidths, 0.0, base, result);
  return result;
}

} // namespace dgwr
