#pragma once

#include <Eigen/Dense>
#include <random>

namespace stochsqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

}  // namespace stochsqp
