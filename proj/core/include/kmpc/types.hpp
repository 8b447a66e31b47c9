#pragma once

#include <Eigen/Dense>

namespace kmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace kmpc
