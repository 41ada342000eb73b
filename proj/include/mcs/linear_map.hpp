#pragma once

#include <functional>

#include <Eigen/Dense>

namespace mcs {

/// A linear operator given by its action on vectors.
using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

}  // namespace mcs
