#include "stochsqp/kkt.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "stochsqp/errors.hpp"

namespace stochsqp {

KktSystem::KktSystem(Matrix H_in, Matrix J_in) : H(std::move(H_in)), J(std::move(J_in)) {
  if (H.rows() == 0 || H.rows() != H.cols()) {
    throw ContractViolation("KktSystem: H must be square and nonempty");
  }
  if (J.cols() != H.rows()) {
    throw ContractViolation("KktSystem: J must have as many columns as H has rows");
  }
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12 * scale)) {
    throw ContractViolation("KktSystem: H is not symmetric to working precision");
  }
}

KktRhs apply_kkt(const KktSystem& sys, const KktSolution& v) {
  if (v.d.size() != sys.n() || v.delta.size() != sys.m()) {
    throw ContractViolation("apply_kkt: candidate dimensions do not match the system");
  }
  return {sys.H * v.d + sys.J.transpose() * v.delta, sys.J * v.d};
}

ResidualPair residual_split(const KktSystem& sys, const KktSolution& v, const KktRhs& rhs) {
  if (rhs.top.size() != sys.n() || rhs.bottom.size() != sys.m()) {
    throw ContractViolation("residual_split: rhs dimensions do not match the system");
  }
  KktRhs applied = apply_kkt(sys, v);
  return {applied.top - rhs.top, applied.bottom - rhs.bottom};
}

namespace {

Vector apply_flat(const KktSystem& sys, const Vector& z) {
  const Index n = sys.n();
  const Index m = sys.m();
  Vector out(n + m);
  out.head(n) = sys.H * z.head(n) + sys.J.transpose() * z.tail(m);
  out.tail(m) = sys.J * z.head(n);
  return out;
}

}  // namespace

MinresResult minres_solve(const KktSystem& sys, const KktRhs& rhs,
                          const TerminatePredicate& terminate, long max_iters, double tol) {
  const Index n = sys.n();
  const Index m = sys.m();
  if (rhs.top.size() != n || rhs.bottom.size() != m) {
    throw ContractViolation("minres_solve: rhs dimensions do not match the system");
  }
  if (max_iters < 0) throw ContractViolation("minres_solve: max_iters must be nonnegative");
  if (!(tol >= 0.0)) throw ContractViolation("minres_solve: tol must be nonnegative");

  const Index N = n + m;
  Vector b(N);
  b << rhs.top, rhs.bottom;
  const double bnorm = b.norm();
  const double tol_abs = tol * std::max(1.0, bnorm);

  MinresResult out;
  // Evaluates the predicate and the tolerance stop on the exactly recomputed
  // residual; the recurrence residual below is never trusted for termination.
  auto check = [&](const Vector& xv, long t) -> bool {
    if (!xv.allFinite()) throw NumericalBreakdown("minres_solve: non-finite iterate", t);
    KktSolution sol{xv.head(n), xv.tail(m)};
    ResidualPair res = residual_split(sys, sol, rhs);
    if (!res.rho.allFinite() || !res.r.allFinite()) {
      throw NumericalBreakdown("minres_solve: non-finite residual", t);
    }
    StopCase sc = terminate ? terminate(sol, res, t) : StopCase::kNone;
    if (sc != StopCase::kNone) {
      TerminationCase kind =
          sc == StopCase::kCaseA ? TerminationCase::kCaseA : TerminationCase::kCaseB;
      out = {std::move(sol), std::move(res), {kind, t}};
      return true;
    }
    const double full = std::sqrt(res.rho.squaredNorm() + res.r.squaredNorm());
    if (full <= tol_abs) {
      out = {std::move(sol), std::move(res), {TerminationCase::kFallback, t}};
      return true;
    }
    return false;
  };
  auto fallback_at = [&](const Vector& xv, long t) {
    KktSolution sol{xv.head(n), xv.tail(m)};
    ResidualPair res = residual_split(sys, sol, rhs);
    return MinresResult{std::move(sol), std::move(res), {TerminationCase::kFallback, t}};
  };

  Vector x = Vector::Zero(N);
  if (check(x, 0)) return out;
  if (max_iters == 0 || bnorm == 0.0) return fallback_at(x, 0);

  // Lanczos + Givens recurrences in the Paige-Saunders arrangement.
  const double eps = std::numeric_limits<double>::epsilon();
  Vector r1 = b;
  Vector y = r1;
  const double beta1 = bnorm;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector w = Vector::Zero(N);
  Vector w2 = Vector::Zero(N);
  Vector r2 = r1;

  for (long itn = 1; itn <= max_iters; ++itn) {
    const double s = 1.0 / beta;
    Vector v = s * y;
    y = apply_flat(sys, v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = r2.norm();

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;

    double gamma = std::sqrt(gbar * gbar + beta * beta);
    gamma = std::max(gamma, eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    Vector w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;

    if (check(x, itn)) return out;
    // Krylov subspace exhausted: the current iterate is as good as it gets.
    if (beta <= 10.0 * eps * beta1) return fallback_at(x, itn);
  }
  return fallback_at(x, max_iters);
}

KktSolution direct_solve(const KktSystem& sys, const KktRhs& rhs) {
  const Index n = sys.n();
  const Index m = sys.m();
  if (rhs.top.size() != n || rhs.bottom.size() != m) {
    throw ContractViolation("direct_solve: rhs dimensions do not match the system");
  }
  const Index N = n + m;
  Matrix K(N, N);
  K.topLeftCorner(n, n) = sys.H;
  K.topRightCorner(n, m) = sys.J.transpose();
  K.bottomLeftCorner(m, n) = sys.J;
  K.bottomRightCorner(m, m).setZero();

  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) {
    throw SingularSystemError("direct_solve: KKT matrix is singular to working precision");
  }
  Vector b(N);
  b << rhs.top, rhs.bottom;
  Vector z = lu.solve(b);
  return {z.head(n), z.tail(m)};
}

Vector least_squares_multipliers(const Matrix& J, const Vector& g) {
  if (J.cols() != g.size()) {
    throw ContractViolation("least_squares_multipliers: J and g dimensions do not match");
  }
  if (J.rows() == 0) return Vector(0);
  Matrix JJt = J * J.transpose();
  Eigen::LLT<Matrix> llt(JJt);
  if (llt.info() != Eigen::Success) {
    throw SingularSystemError(
        "least_squares_multipliers: J J^T is not positive definite (rank-deficient Jacobian)");
  }
  Vector y = llt.solve(-(J * g));
  if (!y.allFinite()) {
    throw SingularSystemError("least_squares_multipliers: non-finite multiplier estimate");
  }
  return y;
}

}  // namespace stochsqp
