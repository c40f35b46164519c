#pragma once

#include "dgwr/dataset.hpp"

#include <Eigen/Dense>
#include <random>

namespace fixtures {

//! Random instance on [0,1]^2: intercept plus p-1 standard normal
//! covariates, y = x'beta + N(0,1) with a fraction `contamination` of
//! responses shifted by +10.
inline dgwr::SpatialDataset
random_dataset(int n, int p, unsigned seed, double contamination = 0.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  dgwr::Coordinates coords(n, 2);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  Eigen::VectorXd beta(p);
  for (int k = 0; k < p; ++k)
    beta(k) = 1.0 + 0.5 * k;
  for (int i = 0; i < n; ++i) {
    coords(i, 0) = unif(rng);
    coords(i, 1) = unif(rng);
    x(i, 0) = 1.0;
    for (int k = 1; k < p; ++k)
      x(i, k) = normal(rng);
    y(i) = x.row(i).dot(beta) + normal(rng);
    if (unif(rng) < contamination)
      y(i) += 10.0;
  }
  return { coords, x, y };
}

} // namespace fixtures
