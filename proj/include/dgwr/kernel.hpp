#pragma once

#include "errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace dgwr {

//! Planar coordinates, one row per location. Longitude/latitude pairs are
//! used as-is; project them first if the extent is large.
using Coordinates = Eigen::Matrix<double, Eigen::Dynamic, 2>;

enum class KernelFamily
{
  Gaussian,
  Bisquare,
};

inline std::string_view
kernel_family_name(KernelFamily family)
{
  return family == KernelFamily::Gaussian ? "gaussian" : "bisquare";
}

inline KernelFamily
parse_kernel_family(std::string_view name)
{
  if (name == "gaussian")
    return KernelFamily::Gaussian;
  if (name == "bisquare")
    return KernelFamily::Bisquare;
  fail(ErrorCode::Config, "unknown kernel family '" + std::string(name) + "'");
}

struct KernelSpec
{
  KernelFamily family = KernelFamily::Gaussian;
  double bandwidth = 1.0;

  void validate() const
  {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      fail(ErrorCode::Config,
           "bandwidth must be positive and finite, got " +
             std::to_string(bandwidth));
  }

  //! Weight at distance d; both families give w(0) = 1.
  double weight(double d) const
  {
    const double t = d / bandwidth;
    switch (family) {
      case KernelFamily::Gaussian:
        return std::exp(-0.5 * t * t);
      case KernelFamily::Bisquare:
        if (t >= 1.0)
          return 0.0;
        return (1.0 - t * t) * (1.0 - t * t);
    }
    return 0.0;
  }
};

//! Kernel weights w_i1(b), ..., w_in(b) seen from one target location.
struct WeightVector
{
  Eigen::Index target_index = 0;
  Eigen::VectorXd weights;

  double effective_sample_size() const { return weights.sum(); }
};

inline void
validate_coordinates(const Coordinates& coords)
{
  if (coords.rows() < 1)
    fail(ErrorCode::Input, "at least one location is required");
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    if (!std::isfinite(coords(i, 0)) || !std::isfinite(coords(i, 1)))
      fail(ErrorCode::Input,
           "non-finite coordinate at row " + std::to_string(i));
}

//! Dense symmetric matrix of Euclidean distances.
inline Eigen::MatrixXd
distance_matrix(const Coordinates& coords)
{
  validate_coordinates(coords);
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dist = (coords.row(i) - coords.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  return d;
}

inline WeightVector
kernel_weights(const KernelSpec& spec,
               const Eigen::Ref<const Eigen::VectorXd>& distances,
               Eigen::Index target)
{
  spec.validate();
  if (target < 0 || target >= distances.size())
    fail(ErrorCode::Input, "target index out of range");
  WeightVector out;
  out.target_index = target;
  out.weights = distances.unaryExpr([&](double d) { return spec.weight(d); });
  out.weights(target) = 1.0;
  return out;
}

//! Median over the n(n-1)/2 unordered pairs i < j. Zero self-distances
//! are excluded.
inline double
median_pairwise_distance(const Coordinates& coords)
{
  validate_coordinates(coords);
  const Eigen::Index n = coords.rows();
  if (n < 2)
    fail(ErrorCode::Input, "median pairwise distance needs n >= 2");
  std::vector<double> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      pairs.push_back((coords.row(i) - coords.row(j)).norm());

  const std::size_t m = pairs.size();
  const auto mid = pairs.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(pairs.begin(), mid, pairs.end());
  const double upper = *mid;
  if (m % 2 == 1)
    return upper;
  const double lower = *std::max_element(pairs.begin(), mid);
  return 0.5 * (lower + upper);
}

//! {k b* / L : k = 1..L}, ascending, with b* the median pairwise distance.
inline std::vector<double>
bandwidth_grid(const Coordinates& coords, int levels = 10)
{
  if (levels < 1)
    fail(ErrorCode::Config, "bandwidth grid needs at least one level");
  const double b_star = median_pairwise_distance(coords);
  if (!(b_star > 0.0))
    fail(ErrorCode::Input, "median pairwise distance is zero");
  std::vector<double> grid(static_cast<std::size_t>(levels));
  for (int k = 1; k <= levels; ++k)
    grid[static_cast<std::size_t>(k - 1)] = k * b_star / levels;
  grid.back() = b_star;
  return grid;
}

} // namespace dgwr
