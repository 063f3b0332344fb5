#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stochsqp/types.hpp"

namespace stochsqp {

// Equality-constrained stochastic program
//   min f(x) = E[F(x, xi)]  s.t.  c(x) = 0
// where only sampled gradients of f are available to the solver; f_true and
// g_true exist for evaluation and for finite-sum means.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual const std::string& name() const = 0;
  virtual Index n() const = 0;
  virtual Index m() const = 0;
  // Finite-sum component count; nullopt marks an unbounded sample space.
  virtual std::optional<long> sample_count() const = 0;

  virtual double f_true(const Vector& x) const = 0;
  virtual Vector g_true(const Vector& x) const = 0;
  // Gradient of one component: finite sums use index i in [0, N); unbounded
  // spaces ignore i and consume rng for the draw.
  virtual Vector g_sample(const Vector& x, long i, Rng& rng) const = 0;
  virtual Vector c(const Vector& x) const = 0;
  virtual Matrix jac(const Vector& x) const = 0;

  virtual Vector x0() const;  // all ones unless a subclass overrides
  virtual std::optional<Vector> reference_solution() const { return std::nullopt; }
};

using ProblemPtr = std::shared_ptr<const Problem>;

// Binary-classification data; feature column i is sample i, labels are +-1.
struct Dataset {
  Matrix X;        // n x N
  Vector y;        // length N, entries exactly +-1
  Index n() const { return X.rows(); }
  Index N() const { return X.cols(); }
};

// Strict sparse-text reader: `label idx:val ...` lines, 1-based strictly
// ascending indices, optional +/- on the label, `#` starts a comment. Labels
// may be +-1 or {0,1} (0 maps to -1). Feature dimension = max index seen.
// Malformed content raises ParseError with the 1-based line number.
Dataset load_libsvm(const std::string& path);

// Inverse of load_libsvm up to exact round-trip: nonzero entries as
// index:value with 17 significant digits; pads the first line so the
// dimension survives reloading.
void write_libsvm(const std::string& path, const Dataset& ds);

// f(x) = (1/N) sum_i log(1 + exp(-y_i X_i^T x)),
// c(x) = [A x - b1; ||x||_2^2 - b2], A and b1 i.i.d. standard normal from
// `seed`. Warns on stderr if the stacked Jacobian is rank deficient at x0.
ProblemPtr build_logistic_problem(std::string name, Dataset ds, Index m_lin, std::uint64_t seed,
                                  double b2 = 1.0);

// Gradient of component i of the logistic objective: -y_i X_i / (1 + e^t),
// t = y_i X_i^T x clamped to [-30, 30].
Vector logistic_sample_gradient(const Dataset& ds, const Vector& x, long i);

// Random separable-ish classification data for self-contained experiments.
Dataset synthetic_logistic_dataset(Index N, Index n, std::uint64_t seed);

// Wraps a deterministic problem: sampled gradients become
// g_true(x) + z with z ~ Normal(0, eps * I) (per-component variance eps).
// The sample space becomes unbounded.
ProblemPtr with_additive_noise(ProblemPtr inner, double eps);

// Deterministic test family, same layout for a given seed: convex QPs with a
// known KKT solution, Rosenbrock objectives under linear constraints, and
// quadratics restricted to a sphere; n in {10, 50, 100}. Every instance
// passes a LICQ filter at x0 (min singular value of jac(x0) > 1e-8).
std::vector<ProblemPtr> synthetic_suite(std::uint64_t seed);

// min 0.5 x^T x + q^T x  s.t.  A x = b with random full-rank A; carries the
// closed-form KKT solution. Used by the exactness studies.
ProblemPtr make_identity_qp(Index n, Index m, std::uint64_t seed);

// General convex QP min 0.5 x^T Q x + q^T x s.t. A x = b; stores the KKT
// solution as the reference point when the saddle-point matrix is invertible.
ProblemPtr make_equality_qp(std::string name, Matrix Q, Vector q, Matrix A, Vector b);

}  // namespace stochsqp
