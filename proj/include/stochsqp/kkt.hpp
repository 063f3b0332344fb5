#pragma once

#include <functional>

#include "stochsqp/types.hpp"

namespace stochsqp {

// Saddle-point system
//   [ H  J^T ] [ d     ]   [ top    ]
//   [ J   0  ] [ delta ] = [ bottom ]
// with H symmetric n x n and J m x n.
struct KktSystem {
  Matrix H;
  Matrix J;

  // Throws ContractViolation on dimension mismatch or asymmetric H
  // (tolerance 1e-12 on max |H - H^T| relative to max |H|, floor 1).
  KktSystem(Matrix H, Matrix J);

  Index n() const { return H.rows(); }
  Index m() const { return J.rows(); }
  Index size() const { return n() + m(); }
};

struct KktRhs {
  Vector top;     // length n
  Vector bottom;  // length m
};

struct KktSolution {
  Vector d;      // length n
  Vector delta;  // length m
};

// Block residual of a candidate solution: (rho, r) such that
//   K * [d; delta] = [top; bottom] + [rho; r].
// rho is the stationarity block, r the constraint block.
struct ResidualPair {
  Vector rho;  // length n
  Vector r;    // length m
};

enum class TerminationCase { kCaseA, kCaseB, kFallback };

struct TerminationVerdict {
  TerminationCase kind;
  long iterations;  // Krylov iterations consumed; the zero start counts as 0.
};

// What a per-iteration termination predicate may answer.
enum class StopCase { kNone, kCaseA, kCaseB };

using TerminatePredicate =
    std::function<StopCase(const KktSolution&, const ResidualPair&, long iteration)>;

struct MinresResult {
  KktSolution solution;
  ResidualPair residual;
  TerminationVerdict verdict;
};

// Applies the KKT operator to a candidate: returns {H d + J^T delta, J d}.
KktRhs apply_kkt(const KktSystem& sys, const KktSolution& v);

// Exact residual of a candidate: apply_kkt(sys, v) - rhs, recomputed from scratch.
ResidualPair residual_split(const KktSystem& sys, const KktSolution& v, const KktRhs& rhs);

// MINRES on the assembled saddle-point system, starting from the zero vector.
// The predicate is evaluated at every iterate (including the zero start at
// iteration 0) on the exactly recomputed residual pair; the first iterate it
// accepts is returned with the matching verdict. If it never fires, iteration
// stops once ||full residual||_2 <= tol * max(1, ||rhs||_2) or after max_iters
// steps, with a Fallback verdict either way. NaN/Inf in the iterate or
// residual raises NumericalBreakdown carrying the iteration index.
MinresResult minres_solve(const KktSystem& sys, const KktRhs& rhs,
                          const TerminatePredicate& terminate, long max_iters, double tol);

// Dense rank-revealing solve of the assembled system; SingularSystemError if
// the factorization finds the matrix singular to working precision.
KktSolution direct_solve(const KktSystem& sys, const KktRhs& rhs);

// argmin_y ||g + J^T y||_2 via the normal equations (J J^T) y = -J g.
// SingularSystemError if J J^T is not positive definite (rank-deficient J).
Vector least_squares_multipliers(const Matrix& J, const Vector& g);

}  // namespace stochsqp
