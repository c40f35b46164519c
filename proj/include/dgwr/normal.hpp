#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

namespace dgwr {

//! log phi(y; mean, variance) for the univariate normal.
inline double
log_normal_density(double y, double mean, double variance)
{
  const double r = y - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) -
         0.5 * r * r / variance;
}

//! log(sum exp(v)) over finite-or-(-inf) entries. Returns -inf if every
//! entry is -inf.
inline double
log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  const double m = v.maxCoeff();
  if (!std::isfinite(m))
    return m;
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    s += std::exp(v(j) - m);
  return m + std::log(s);
}

//! Elementwise log with log(0) = -inf, used for kernel weights that vanish.
inline Eigen::VectorXd
log_weights(const Eigen::Ref<const Eigen::VectorXd>& w)
{
  return w.unaryExpr([](double x) {
    return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
  });
}

} // namespace dgwr
