#pragma once

#include <optional>
#include <vector>

#include "stochsqp/problems.hpp"
#include "stochsqp/types.hpp"

namespace stochsqp {

// A drawn batch. Finite populations list the chosen indices in ascending
// order; unbounded populations record only the draw count.
struct SampleSet {
  std::vector<long> indices;
  long size = 0;
};

struct GradientEstimate {
  Vector gbar;      // mean of the sampled gradients
  double variance;  // (1/(|S|-1)) sum_i ||g_i - gbar||_2^2; zero when |S| = 1
  long sample_size;
};

// Uniform sample without replacement from {0, ..., N-1}; for an unbounded
// population (nullopt) the set only carries the count. Deterministic given
// the rng state.
SampleSet draw_sample(Rng& rng, std::optional<long> population, long size);

// Mean and trace sample variance of g_sample over the set. The rng feeds
// unbounded-population draws; finite sums never touch it.
GradientEstimate estimate_gradient(const Problem& problem, const Vector& x, const SampleSet& s,
                                   Rng& rng);

// Accuracy test: Var / |S| <= theta1 * beta^sigma * delta_l. A negative or
// zero right side fails the test unless the variance is zero too.
bool norm_test(const GradientEstimate& est, double delta_l, double theta1, double beta,
               double sigma);

// Smallest admissible next size when the test fails:
// min(cap, max(|S|, ceil(Var / (theta1 * beta^sigma * delta_l)))).
// A nonpositive denominator jumps straight to the cap.
long next_sample_size(const GradientEstimate& est, double delta_l, double theta1, double beta,
                      double sigma, long cap);

// Polynomial schedule min(cap, ceil(base * (k+1)^nu)) for iteration k.
long predetermined_size(long k, double base, double nu, long cap);

enum class SamplingMode { kFixed, kAdaptive, kPredetermined };

// Owns the batch-size schedule across iterations; every mode is
// non-decreasing by construction.
class SamplingController {
 public:
  static SamplingController fixed(long size);
  static SamplingController adaptive(long initial, long cap, double theta1, double beta,
                                     double sigma);
  static SamplingController predetermined(double base, double nu, long cap);

  SamplingMode mode() const { return mode_; }
  long current() const { return current_; }

  // Advances the schedule after iteration k completes with the given
  // estimate and accepted model reduction.
  void observe(const GradientEstimate& est, double delta_l, long k);

 private:
  SamplingController() = default;
  SamplingMode mode_ = SamplingMode::kFixed;
  long current_ = 1;
  long cap_ = 1;
  double theta1_ = 0.0, beta_ = 0.0, sigma_ = 0.0;
  double base_ = 0.0, nu_ = 0.0;
};

}  // namespace stochsqp
