#pragma once

// Shared generators and small oracles for the test binaries.

#include <random>

#include "stochsqp/kkt.hpp"
#include "stochsqp/types.hpp"

namespace testsup {

using stochsqp::Index;
using stochsqp::Matrix;
using stochsqp::Rng;
using stochsqp::Vector;

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = gauss(rng);
  return M;
}

inline Vector random_vector(Rng& rng, Index size) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = gauss(rng);
  return v;
}

// SPD H keeps the saddle-point system nonsingular for any full-rank J and the
// conditioning moderate, so iterative and direct solves agree tightly.
inline Matrix random_spd(Rng& rng, Index n) {
  Matrix M = random_matrix(rng, n, n);
  return (M * M.transpose()) / static_cast<double>(n) + Matrix::Identity(n, n);
}

inline Matrix random_full_rank(Rng& rng, Index m, Index n) {
  while (true) {
    Matrix J = random_matrix(rng, m, n) / std::sqrt(static_cast<double>(n));
    Eigen::JacobiSVD<Matrix> svd(J);
    if (svd.singularValues().minCoeff() > 1e-6) return J;
  }
}

struct RandomKkt {
  stochsqp::KktSystem sys;
  stochsqp::KktRhs rhs;
};

inline RandomKkt random_kkt(Rng& rng, Index n, Index m) {
  Matrix H = random_spd(rng, n);
  Matrix J = random_full_rank(rng, m, n);
  Vector top = random_vector(rng, n);
  Vector bottom = random_vector(rng, m);
  return {stochsqp::KktSystem(std::move(H), std::move(J)), {std::move(top), std::move(bottom)}};
}

}  // namespace testsup
