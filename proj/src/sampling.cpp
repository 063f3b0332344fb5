#include "stochsqp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stochsqp/errors.hpp"

namespace stochsqp {

SampleSet draw_sample(Rng& rng, std::optional<long> population, long size) {
  if (size < 1) throw ContractViolation("draw_sample: size must be >= 1");
  if (!population.has_value()) return {{}, size};

  const long N = *population;
  if (N < 1) throw ContractViolation("draw_sample: population must be >= 1");
  if (size > N) throw ContractViolation("draw_sample: size exceeds the population");

  // Partial Fisher-Yates over the index range, then ascending set order.
  std::vector<long> pool(static_cast<std::size_t>(N));
  std::iota(pool.begin(), pool.end(), 0L);
  for (long j = 0; j < size; ++j) {
    std::uniform_int_distribution<long> pick(j, N - 1);
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(size));
  std::sort(pool.begin(), pool.end());
  return {std::move(pool), size};
}

GradientEstimate estimate_gradient(const Problem& problem, const Vector& x, const SampleSet& s,
                                   Rng& rng) {
  if (s.size < 1) throw ContractViolation("estimate_gradient: empty sample");
  const bool finite = problem.sample_count().has_value();
  if (finite && static_cast<long>(s.indices.size()) != s.size) {
    throw ContractViolation("estimate_gradient: finite-sum sample must list its indices");
  }

  std::vector<Vector> grads;
  grads.reserve(static_cast<std::size_t>(s.size));
  if (finite) {
    const long N = *problem.sample_count();
    for (long idx : s.indices) {
      if (idx < 0 || idx >= N) throw ContractViolation("estimate_gradient: index out of range");
      grads.push_back(problem.g_sample(x, idx, rng));
    }
  } else {
    for (long i = 0; i < s.size; ++i) grads.push_back(problem.g_sample(x, 0, rng));
  }

  Vector sum = Vector::Zero(x.size());
  for (const Vector& g : grads) sum += g;
  Vector gbar = sum / static_cast<double>(s.size);

  double variance = 0.0;
  if (s.size > 1) {
    double acc = 0.0;
    for (const Vector& g : grads) acc += (g - gbar).squaredNorm();
    variance = acc / static_cast<double>(s.size - 1);
  }
  return {std::move(gbar), variance, s.size};
}

bool norm_test(const GradientEstimate& est, double delta_l, double theta1, double beta,
               double sigma) {
  if (est.sample_size < 1) throw ContractViolation("norm_test: empty estimate");
  if (est.variance == 0.0) return true;  // vacuous: no dispersion to control
  const double lhs = est.variance / static_cast<double>(est.sample_size);
  const double rhs = theta1 * std::pow(beta, sigma) * delta_l;
  return lhs <= rhs;
}

long next_sample_size(const GradientEstimate& est, double delta_l, double theta1, double beta,
                      double sigma, long cap) {
  if (cap < 1) throw ContractViolation("next_sample_size: cap must be >= 1");
  const double denom = theta1 * std::pow(beta, sigma) * delta_l;
  if (!(denom > 0.0)) return cap;
  const double needed = std::ceil(est.variance / denom);
  long grown = est.sample_size;
  if (needed > static_cast<double>(cap)) {
    grown = cap;
  } else {
    grown = std::max(est.sample_size, static_cast<long>(needed));
  }
  return std::min(cap, grown);
}

long predetermined_size(long k, double base, double nu, long cap) {
  if (k < 0) throw ContractViolation("predetermined_size: k must be >= 0");
  if (!(base >= 1.0)) throw ContractViolation("predetermined_size: base must be >= 1");
  if (!(nu > 1.0)) throw ContractViolation("predetermined_size: nu must be > 1");
  if (cap < 1) throw ContractViolation("predetermined_size: cap must be >= 1");
  const double raw = base * std::pow(static_cast<double>(k + 1), nu);
  if (raw >= static_cast<double>(cap)) return cap;
  return std::min(cap, static_cast<long>(std::ceil(raw)));
}

SamplingController SamplingController::fixed(long size) {
  if (size < 1) throw ContractViolation("SamplingController: fixed size must be >= 1");
  SamplingController c;
  c.mode_ = SamplingMode::kFixed;
  c.current_ = size;
  c.cap_ = size;
  return c;
}

SamplingController SamplingController::adaptive(long initial, long cap, double theta1,
                                                double beta, double sigma) {
  if (initial < 1 || cap < initial) {
    throw ContractViolation("SamplingController: need 1 <= initial <= cap");
  }
  if (!(theta1 > 0.0)) throw ContractViolation("SamplingController: theta1 must be positive");
  SamplingController c;
  c.mode_ = SamplingMode::kAdaptive;
  c.current_ = initial;
  c.cap_ = cap;
  c.theta1_ = theta1;
  c.beta_ = beta;
  c.sigma_ = sigma;
  return c;
}

SamplingController SamplingController::predetermined(double base, double nu, long cap) {
  SamplingController c;
  c.mode_ = SamplingMode::kPredetermined;
  c.current_ = predetermined_size(0, base, nu, cap);
  c.cap_ = cap;
  c.base_ = base;
  c.nu_ = nu;
  return c;
}

void SamplingController::observe(const GradientEstimate& est, double delta_l, long k) {
  switch (mode_) {
    case SamplingMode::kFixed:
      break;
    case SamplingMode::kAdaptive:
      if (!norm_test(est, delta_l, theta1_, beta_, sigma_)) {
        current_ = std::max(current_, next_sample_size(est, delta_l, theta1_, beta_, sigma_, cap_));
      }
      break;
    case SamplingMode::kPredetermined:
      current_ = std::max(current_, predetermined_size(k + 1, base_, nu_, cap_));
      break;
  }
}

}  // namespace stochsqp
