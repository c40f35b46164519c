#pragma once

#include "errors.hpp"
#include "kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>

namespace dgwr {

//! The (s_i, x_i, y_i) triples. Immutable once built; the distance matrix
//! is computed once and shared between copies that keep the same
//! coordinates (see with_response()).
class SpatialDataset
{
public:
  SpatialDataset(Coordinates coords, Eigen::MatrixXd design,
                 Eigen::VectorXd response)
    : coords_(std::move(coords))
    , design_(std::move(design))
    , response_(std::move(response))
  {
    validate();
    distances_ =
      std::make_shared<const Eigen::MatrixXd>(distance_matrix(coords_));
  }

  Eigen::Index size() const { return response_.size(); }
  Eigen::Index num_covariates() const { return design_.cols(); }

  const Coordinates& coords() const { return coords_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& response() const { return response_; }
  const Eigen::MatrixXd& distances() const { return *distances_; }

  WeightVector weights(const KernelSpec& kernel, Eigen::Index target) const
  {
    return kernel_weights(kernel, distances_->col(target), target);
  }

  //! Same locations and design, new response.
  SpatialDataset with_response(Eigen::VectorXd response) const
  {
    SpatialDataset out = *this;
    out.response_ = std::move(response);
    out.validate();
    return out;
  }

  double response_variance() const
  {
    const double mean = response_.mean();
    const double n = static_cast<double>(response_.size());
    if (n < 2)
      return 0.0;
    return (response_.array() - mean).square().sum() / (n - 1.0);
  }

private:
  void validate() const
  {
    validate_coordinates(coords_);
    const Eigen::Index n = coords_.rows();
    if (design_.rows() != n || response_.size() != n)
      fail(ErrorCode::Input, "coordinates, design and response row counts differ");
    if (design_.cols() < 1)
      fail(ErrorCode::Input, "design matrix has no columns");
    if (n < design_.cols() + 1)
      fail(ErrorCode::Input,
           "need n >= p + 1 (n=" + std::to_string(n) +
             ", p=" + std::to_string(design_.cols()) + ")");
    if (!design_.allFinite() || !response_.allFinite())
      fail(ErrorCode::Input, "design or response contains non-finite values");
  }

  Coordinates coords_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  std::shared_ptr<const Eigen::MatrixXd> distances_;
};

} // namespace dgwr
