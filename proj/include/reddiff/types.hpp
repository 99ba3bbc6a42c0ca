#pragma once

#include <Eigen/Dense>

namespace reddiff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace reddiff
