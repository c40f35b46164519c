#pragma once

#include "dataset.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "kernel.hpp"
#include "selection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dgwr::sim {

using Rng = std::mt19937_64;

//! splitmix64 finalizer.
inline std::uint64_t
mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Seed of stream `stream` under base seed `seed`. Replication r of a run
//! draws everything from Rng(stream_seed(seed, r)), so streams never
//! depend on how many replications are requested.
inline std::uint64_t
stream_seed(std::uint64_t seed, std::uint64_t stream)
{
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

enum class Scenario
{
  MixtureVariance = 1, // (1-w) N(0, s2) + w N(0, a^2 s2)
  MeanShift = 2,       // (1-w) N(0, s2) + w N(a, s2)
};

inline std::string_view
scenario_name(Scenario s)
{
  return s == Scenario::MixtureVariance ? "mixture-variance" : "mean-shift";
}

struct ScenarioConfig
{
  int n = 200;
  Scenario scenario = Scenario::MixtureVariance;
  double omega = 0.0;
  double a = 10.0;
  double sigma2 = 1.0;
  double phi = 0.4;
  double r = 0.75;
  double tau2 = 2.0;
  std::vector<double> psi{ 1.0, 2.0, 3.0 };
  std::uint64_t seed = 1;

  void validate() const
  {
    if (n < 5)
      fail(ErrorCode::Config, "n must be at least 5");
    if (!(omega >= 0.0 && omega < 1.0))
      fail(ErrorCode::Config, "omega must lie in [0, 1)");
    if (!(sigma2 > 0.0) || !(phi > 0.0) || !(tau2 > 0.0) || !(a >= 0.0))
      fail(ErrorCode::Config, "sigma2, phi, tau2 must be positive, a >= 0");
    if (!(r >= -1.0 && r <= 1.0))
      fail(ErrorCode::Config, "r must lie in [-1, 1]");
    if (psi.size() != 3)
      fail(ErrorCode::Config, "psi needs one range per coefficient (3)");
    for (double v : psi)
      if (!(v > 0.0))
        fail(ErrorCode::Config, "psi entries must be positive");
  }
};

//! True when s lies in the sampling domain.
inline bool
in_domain(double s1, double s2)
{
  return s1 >= -1.0 && s1 <= 1.0 && s2 >= 0.0 && s2 <= 2.0 &&
         s1 * s1 + 0.5 * s2 * s2 > 0.25;
}

//! Rejection sampling: uniform on [-1,1]x[0,2], accept when
//! s1^2 + 0.5 s2^2 > 0.25.
inline Coordinates
sample_domain(int n, Rng& rng)
{
  if (n < 1)
    fail(ErrorCode::Config, "n must be positive");
  std::uniform_real_distribution<double> u1(-1.0, 1.0);
  std::uniform_real_distribution<double> u2(0.0, 2.0);
  Coordinates out(n, 2);
  int k = 0;
  while (k < n) {
    const double s1 = u1(rng);
    const double s2 = u2(rng);
    if (s1 * s1 + 0.5 * s2 * s2 > 0.25) {
      out(k, 0) = s1;
      out(k, 1) = s2;
      ++k;
    }
  }
  return out;
}

//! variance * exp(-d_ij / range)
inline Eigen::MatrixXd
exponential_covariance(const Eigen::MatrixXd& distances, double range,
                       double variance)
{
  if (!(range > 0.0) || !(variance > 0.0))
    fail(ErrorCode::Config, "GP range and variance must be positive");
  return variance * (-distances.array() / range).exp().matrix();
}

//! Zero-mean Gaussian process with exponential covariance on fixed sites.
class GaussianProcess
{
public:
  GaussianProcess(const Eigen::MatrixXd& distances, double range,
                  double variance)
  {
    const Eigen::MatrixXd cov = exponential_covariance(distances, range, variance);
    const Eigen::Index n = cov.rows();
    double jitter = 1e-8 * variance;
    for (int attempt = 0; attempt <= 3; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(
        cov + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
        return;
      }
      jitter *= 10.0;
    }
    fail(ErrorCode::Numerical, "GP covariance factorization failed");
  }

  Eigen::VectorXd draw(Rng& rng) const
  {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(factor_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z(i) = normal(rng);
    return factor_ * z;
  }

  const Eigen::MatrixXd& factor() const { return factor_; }

private:
  Eigen::MatrixXd factor_;
};

inline Eigen::VectorXd
gp_sample(const Coordinates& coords, double range, double variance, Rng& rng)
{
  return GaussianProcess(distance_matrix(coords), range, variance).draw(rng);
}

struct SyntheticDataset
{
  SpatialDataset dataset;
  Eigen::MatrixXd true_betas;
  std::vector<bool> outlier_mask;
};

//! Draw order: coordinates, z1, z2, beta_0, beta_1, beta_2, then for each
//! location a contamination uniform followed by one normal.
inline SyntheticDataset
generate(const ScenarioConfig& config, Rng& rng)
{
  config.validate();
  const int n = config.n;
  const Coordinates coords = sample_domain(n, rng);
  const Eigen::MatrixXd dist = distance_matrix(coords);

  const GaussianProcess covariate_gp(dist, config.phi, 1.0);
  const Eigen::VectorXd z1 = covariate_gp.draw(rng);
  const Eigen::VectorXd z2 = covariate_gp.draw(rng);

  Eigen::MatrixXd design(n, 3);
  design.col(0).setOnes();
  design.col(1) = z1;
  design.col(2) = config.r * z1 + std::sqrt(1.0 - config.r * config.r) * z2;

  Eigen::MatrixXd betas(n, 3);
  for (int k = 0; k < 3; ++k)
    betas.col(k) =
      GaussianProcess(dist, config.psi[static_cast<std::size_t>(k)], config.tau2)
        .draw(rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double sigma = std::sqrt(config.sigma2);
  Eigen::VectorXd y(n);
  std::vector<bool> mask(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool outlier = unif(rng) < config.omega;
    const double z = normal(rng);
    double eps = sigma * z;
    if (outlier) {
      if (config.scenario == Scenario::MixtureVariance)
        eps = config.a * sigma * z;
      else
        eps = config.a + sigma * z;
    }
    mask[static_cast<std::size_t>(i)] = outlier;
    y(i) = design.row(i).dot(betas.row(i)) + eps;
  }
  return { SpatialDataset(coords, design, y), betas, mask };
}

//! (1 / np) sum_i sum_k (est_ik - truth_ik)^2
inline double
mse(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth)
{
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
    fail(ErrorCode::Input, "MSE shape mismatch");
  if (truth.size() == 0)
    fail(ErrorCode::Input, "MSE of empty matrices");
  return (estimated - truth).squaredNorm() / static_cast<double>(truth.size());
}

//! Neumaier-compensated sum.
inline double
compensated_sum(const std::vector<double>& v)
{
  double sum = 0.0;
  double c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

//! Linear-interpolation quantile (type 7) of a non-empty sample.
inline double
quantile(std::vector<double> v, double q)
{
  if (v.empty())
    fail(ErrorCode::Input, "quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Summary
{
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

inline Summary
summarize(const std::vector<double>& v)
{
  Summary s;
  s.count = v.size();
  if (v.empty())
    return s;
  s.mean = compensated_sum(v) / static_cast<double>(v.size());
  s.median = quantile(v, 0.5);
  s.q1 = quantile(v, 0.25);
  s.q3 = quantile(v, 0.75);
  return s;
}

struct Methods
{
  bool gwr = true;
  bool dgwr = true;
};

struct ReplicationResult
{
  int index = 0;
  std::uint64_t seed = 0;
  double outlier_fraction = 0.0;
  std::optional<double> mse_gwr;
  std::optional<double> bandwidth_gwr;
  std::optional<double> mse_dgwr;
  std::optional<double> gamma_dgwr;
  std::optional<double> bandwidth_dgwr;
  //! "<method>: <error>" for every failed method.
  std::vector<std::string> errors;
};

struct MethodSummary
{
  Summary mse;
  Summary bandwidth;
  Summary gamma; // DGWR only
  std::size_t failures = 0;
};

struct SimReport
{
  ScenarioConfig config;
  int reps = 0;
  Methods methods;
  TuningGrid grid; // empty bandwidths: per-replication default grid
  int bandwidth_levels = 10;
  std::vector<ReplicationResult> replications;
  MethodSummary gwr;
  MethodSummary dgwr;
};

struct ReplicationOptions
{
  //! Gamma candidates; empty means the default grid.
  std::vector<double> gammas;
  //! Fixed bandwidth candidates; empty means bandwidth_grid(coords, levels)
  //! recomputed for each replication.
  std::vector<double> bandwidths;
  int bandwidth_levels = 10;
  FitConfig base;
};

//! One replication: generate, tune, fit, score.
inline ReplicationResult
run_replication(const ScenarioConfig& config, int index, const Methods& methods,
                const ReplicationOptions& options)
{
  ReplicationResult res;
  res.index = index;
  res.seed = stream_seed(config.seed, static_cast<std::uint64_t>(index));
  Rng rng(res.seed);
  const SyntheticDataset syn = generate(config, rng);
  res.outlier_fraction =
    static_cast<double>(std::count(syn.outlier_mask.begin(),
                                   syn.outlier_mask.end(), true)) /
    static_cast<double>(config.n);

  TuningGrid grid;
  grid.gammas = options.gammas.empty() ? default_gamma_grid() : options.gammas;
  grid.bandwidths = options.bandwidths.empty()
                      ? bandwidth_grid(syn.dataset.coords(), options.bandwidth_levels)
                      : options.bandwidths;

  if (methods.gwr) {
    try {
      const SelectionResult sel =
        select_gwr_bandwidth(syn.dataset, grid.bandwidths, options.base);
      FitConfig cfg = options.base;
      cfg.gamma = 0.0;
      cfg.kernel.bandwidth = sel.b_opt;
      const auto fits = fit_all(syn.dataset, cfg);
      res.bandwidth_gwr = sel.b_opt;
      res.mse_gwr = mse(coefficient_matrix(fits), syn.true_betas);
    } catch (const Error& e) {
      res.errors.push_back(std::string("gwr: ") + e.what());
    }
  }
  if (methods.dgwr) {
    try {
      const SelectionResult sel = select(syn.dataset, grid, options.base);
      FitConfig cfg = options.base;
      cfg.gamma = sel.gamma_opt;
      cfg.kernel.bandwidth = sel.b_opt;
      const auto fits = fit_all(syn.dataset, cfg);
      res.gamma_dgwr = sel.gamma_opt;
      res.bandwidth_dgwr = sel.b_opt;
      res.mse_dgwr = mse(coefficient_matrix(fits), syn.true_betas);
    } catch (const Error& e) {
      res.errors.push_back(std::string("dgwr: ") + e.what());
    }
  }
  return res;
}

inline SimReport
run_replications(const ScenarioConfig& config, int reps, const Methods& methods,
                 const ReplicationOptions& options = {})
{
  config.validate();
  if (reps < 1)
    fail(ErrorCode::Config, "reps must be at least 1");
  SimReport report;
  report.config = config;
  report.reps = reps;
  report.methods = methods;
  report.grid.gammas =
    options.gammas.empty() ? default_gamma_grid() : options.gammas;
  report.grid.bandwidths = options.bandwidths;
  report.bandwidth_levels = options.bandwidth_levels;
  report.replications.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r)
    report.replications.push_back(run_replication(config, r, methods, options));

  std::vector<double> mg, bg, md, bd, gd;
  for (const auto& rep : report.replications) {
    if (methods.gwr) {
      if (rep.mse_gwr) {
        mg.push_back(*rep.mse_gwr);
        bg.push_back(*rep.bandwidth_gwr);
      } else {
        ++report.gwr.failures;
      }
    }
    if (methods.dgwr) {
      if (rep.mse_dgwr) {
        md.push_back(*rep.mse_dgwr);
        bd.push_back(*rep.bandwidth_dgwr);
        gd.push_back(*rep.gamma_dgwr);
      } else {
        ++report.dgwr.failures;
      }
    }
  }
  report.gwr.mse = summarize(mg);
  report.gwr.bandwidth = summarize(bg);
  report.dgwr.mse = summarize(md);
  report.dgwr.bandwidth = summarize(bd);
  report.dgwr.gamma = summarize(gd);
  return report;
}

} // namespace dgwr::sim
