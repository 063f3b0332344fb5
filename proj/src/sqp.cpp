#include "stochsqp/sqp.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "stochsqp/errors.hpp"

namespace stochsqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* message) {
  if (!ok) throw ContractViolation(message);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

double largest_singular_value(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

void SqpParams::validate() const {
  require(tau_init > 0.0, "tau_init must be positive");
  require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  require(alpha_u > 0.0, "alpha_u must be positive");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(omega1 > 0.0 && omega1 < 1.0, "omega1 must lie in (0, 1)");
  require(omega2 > 0.0 && omega2 < 1.0, "omega2 must lie in (0, 1)");
  require(omega_a > 0.0, "omega_a must be positive");
  require(omega_b > 0.0, "omega_b must be positive");
  require(eps_tau > 0.0 && eps_tau < 1.0, "eps_tau must lie in (0, 1)");
  require(sigma > 0.0 && sigma < 4.0, "sigma must lie in (0, 4)");
  require(theta1 > 0.0, "theta1 must be positive");
  require(eps_d > 0.0, "eps_d must be positive");
  require(minres_tol >= 0.0, "minres_tol must be nonnegative");
  require(minres_max_iters >= 0, "minres_max_iters must be nonnegative (0 = automatic)");
  require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
  require(grad_eval_budget >= 1, "grad_eval_budget must be >= 1");
  require(ls_iter_budget >= 1, "ls_iter_budget must be >= 1");
  require(batch_init >= 1, "batch_init must be >= 1");
  require(batch_cap >= 0, "batch_cap must be nonnegative (0 = automatic)");
  require(predetermined_base >= 1.0, "predetermined_base must be >= 1");
  require(predetermined_nu > 1.0, "predetermined_nu must be > 1");
}

double merit_value(double tau, double f, const Vector& c) {
  require(tau > 0.0, "merit_value: tau must be positive");
  return tau * f + c.lpNorm<1>();
}

double model_reduction(double tau, const Vector& gbar, const Vector& d, const Vector& c,
                       const Matrix& J) {
  require(gbar.size() == d.size(), "model_reduction: gbar and d sizes differ");
  require(J.rows() == c.size() && J.cols() == d.size(), "model_reduction: J shape mismatch");
  return -tau * gbar.dot(d) + c.lpNorm<1>() - (c + J * d).lpNorm<1>();
}

double curvature_term(const Matrix& H, const Vector& d, double eps_d) {
  return std::max(d.dot(H * d), eps_d * d.squaredNorm());
}

double trial_merit_parameter(const Vector& gbar, const Vector& d, double quad, const Vector& c,
                             const ResidualPair& res, const SqpParams& p) {
  const double c1 = c.lpNorm<1>();
  const double r1 = res.r.lpNorm<1>();
  const double rho1 = res.rho.lpNorm<1>();
  if (r1 >= (1.0 - p.omega1) * p.omega2 * c1 || rho1 >= p.omega_b * c1) return kInf;
  const double directional = gbar.dot(d) + quad;
  if (directional <= 0.0) return kInf;
  return (1.0 - p.omega1) * (1.0 - p.omega2) * c1 / directional;
}

double update_merit_parameter(double tau_prev, double tau_trial, double eps_tau) {
  require(tau_prev > 0.0, "update_merit_parameter: tau_prev must be positive");
  const double bound = (1.0 - eps_tau) * tau_trial;  // stays +inf for an inf trial
  return tau_prev <= bound ? tau_prev : bound;
}

bool check_case_a(double delta_l, double tau_prev, double quad, const Vector& d, const Vector& c,
                  const ResidualPair& res, const Vector& gbar, const SqpParams& p) {
  const double c1 = c.lpNorm<1>();
  const double r1 = res.r.lpNorm<1>();
  const double reduction_floor =
      tau_prev * p.omega1 * quad + p.omega1 * std::max(c1, r1 - c1);
  if (!(delta_l >= reduction_floor)) return false;
  if (!(r1 <= p.omega_a * std::pow(p.beta, p.sigma / 2.0) * delta_l)) return false;
  if (p.strict_case_a && c1 > 0.0 && !(gbar.dot(d) + quad <= 0.0)) return false;
  return true;
}

bool check_case_b(const ResidualPair& res, const Vector& c, const SqpParams& p) {
  const double c1 = c.lpNorm<1>();
  const double gate =
      std::min((1.0 - p.omega1) * p.omega2, p.omega1 * p.omega_a * std::pow(p.beta, p.sigma / 2.0));
  return res.r.lpNorm<1>() < gate * c1 && res.rho.lpNorm<1>() < p.omega_b * c1;
}

double step_size(double delta_l, double tau_bar, double L, double Gamma, double d_norm_sq,
                 double c_l1, const SqpParams& p) {
  require(delta_l >= 0.0, "step_size: delta_l must be nonnegative");
  require(d_norm_sq > 0.0, "step_size: direction norm must be positive");
  const double denom_scale = tau_bar * L + Gamma;
  require(denom_scale > 0.0, "step_size: tau_bar * L + Gamma must be positive");
  const double q = denom_scale * d_norm_sq;
  const double suff = 2.0 * (1.0 - p.eta) * std::pow(p.beta, p.sigma / 2.0 - 1.0) * delta_l / q;
  const double opt = std::max(std::min(delta_l / q, 1.0), (delta_l - 2.0 * c_l1) / q);
  const double upper = p.alpha_u * std::pow(p.beta, 2.0 - p.sigma / 2.0);
  return std::min(std::min(suff, opt), std::min(upper, 1.0));
}

LipschitzEstimate estimate_lipschitz(const Problem& problem, const Vector& x0, Rng& rng,
                                     int probes) {
  require(probes >= 1, "estimate_lipschitz: probes must be >= 1");
  const double scale = 1e-4 * std::max(1.0, x0.norm());
  const Vector g0 = problem.g_true(x0);
  const Matrix J0 = problem.jac(x0);
  double L = 1e-8, Gamma = 1e-8;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < probes; ++t) {
    Vector u(x0.size());
    do {
      for (Index i = 0; i < u.size(); ++i) u(i) = gauss(rng);
    } while (u.norm() == 0.0);
    u *= scale / u.norm();
    const Vector xp = x0 + u;
    L = std::max(L, (problem.g_true(xp) - g0).norm() / scale);
    Gamma = std::max(Gamma, largest_singular_value(problem.jac(xp) - J0) / scale);
  }
  return {L, Gamma};
}

SqpEngine::SqpEngine(ProblemPtr problem, SqpParams params, SamplingController sampler,
                     std::uint64_t seed, std::optional<Matrix> hessian)
    : problem_(std::move(problem)),
      params_(std::move(params)),
      sampler_(std::move(sampler)),
      rng_(seed) {
  if (!problem_) throw ContractViolation("SqpEngine: problem is null");
  params_.validate();
  const Index n = problem_->n();
  if (hessian.has_value()) {
    H_ = std::move(*hessian);
    if (H_.rows() != n || H_.cols() != n) {
      throw ContractViolation("SqpEngine: hessian must be n x n");
    }
  } else {
    H_ = Matrix::Identity(n, n);
  }
  state_.x = problem_->x0();
  state_.y = least_squares_multipliers(problem_->jac(state_.x), problem_->g_true(state_.x));
  state_.tau_bar = params_.tau_init;
  // The probe stream hangs off the problem name, not the run seed, so every
  // solver variant of one problem works with the same smoothness constants.
  Rng probe_rng(fnv1a64(problem_->name()));
  const LipschitzEstimate lip = estimate_lipschitz(*problem_, state_.x, probe_rng);
  state_.L = lip.L;
  state_.Gamma = lip.Gamma;
}

IterationRecord SqpEngine::step(long ls_allowance) {
  require(ls_allowance >= 0, "SqpEngine::step: ls_allowance must be nonnegative");
  const Index n = problem_->n();
  const Index m = problem_->m();
  const long k = state_.k;

  const long batch = sampler_.current();
  SampleSet sample = draw_sample(rng_, problem_->sample_count(), batch);
  GradientEstimate est = estimate_gradient(*problem_, state_.x, sample, rng_);
  state_.grad_evals += batch;

  const Vector c = problem_->c(state_.x);
  const Matrix J = problem_->jac(state_.x);
  const double c_l1 = c.lpNorm<1>();

  // Evaluation metrics at x_k use the true gradient; they are telemetry and
  // do not count against the sampled-gradient budget.
  const Vector g_exact = problem_->g_true(state_.x);
  const double feasibility = c.lpNorm<Eigen::Infinity>();
  const Vector y_ls = least_squares_multipliers(J, g_exact);
  const double stationarity = (g_exact + J.transpose() * y_ls).lpNorm<Eigen::Infinity>();
  {
    Eigen::JacobiSVD<Matrix> svd(J);
    min_jac_sigma_ = std::min(min_jac_sigma_, svd.singularValues().minCoeff());
  }

  KktSystem sys(H_, J);
  KktRhs rhs{-(est.gbar + J.transpose() * state_.y), -c};
  const double rhs_norm = std::sqrt(rhs.top.squaredNorm() + rhs.bottom.squaredNorm());

  const double tau_prev = state_.tau_bar;
  TerminatePredicate predicate;
  if (!exact_mode_) {
    predicate = [&](const KktSolution& sol, const ResidualPair& res, long) -> StopCase {
      // At an exactly feasible, nonstationary point the zero candidate meets
      // case (a) vacuously (all sides zero); decline it so the solver makes
      // progress toward the nonzero solution.
      if (c_l1 == 0.0 && rhs_norm > 0.0 && sol.d.squaredNorm() == 0.0 &&
          sol.delta.squaredNorm() == 0.0) {
        return StopCase::kNone;
      }
      const double quad = curvature_term(H_, sol.d, params_.eps_d);
      const double dl_prev = -tau_prev * est.gbar.dot(sol.d) + c_l1 - res.r.lpNorm<1>();
      if (check_case_a(dl_prev, tau_prev, quad, sol.d, c, res, est.gbar, params_)) {
        return StopCase::kCaseA;
      }
      if (check_case_b(res, c, params_)) return StopCase::kCaseB;
      return StopCase::kNone;
    };
  }
  long cap = params_.minres_max_iters > 0 ? params_.minres_max_iters : 4 * (n + m);
  cap = std::min(cap, ls_allowance);
  MinresResult mr = minres_solve(sys, rhs, predicate, cap, params_.minres_tol);
  state_.ls_iters += mr.verdict.iterations;

  const Vector& d = mr.solution.d;
  const double quad = curvature_term(H_, d, params_.eps_d);

  // Case (a) keeps the merit parameter; case (b) and fallback solves run the
  // trial update.
  double tau_trial = kInf;
  double tau_bar = tau_prev;
  if (mr.verdict.kind != TerminationCase::kCaseA) {
    tau_trial = trial_merit_parameter(est.gbar, d, quad, c, mr.residual, params_);
    tau_bar = update_merit_parameter(tau_prev, tau_trial, params_.eps_tau);
  }
  state_.tau_bar = tau_bar;

  // Model reduction of the accepted direction, reusing the recomputed
  // constraint-block residual (||c + J d||_1 = ||r||_1 identically).
  const double delta_l = -tau_bar * est.gbar.dot(d) + c_l1 - mr.residual.r.lpNorm<1>();

  const double d_norm_sq = d.squaredNorm();
  double alpha;
  if (std::sqrt(d_norm_sq) <= 1e-14) {
    alpha = 1.0;  // zero direction: skip the formula, the update is a no-op
  } else {
    // Fallback directions carry no reduction guarantee; clamp for the formula.
    const double dl_step =
        mr.verdict.kind == TerminationCase::kFallback ? std::max(delta_l, 0.0) : delta_l;
    alpha = step_size(dl_step, tau_bar, state_.L, state_.Gamma, d_norm_sq, c_l1, params_);
  }

  IterationRecord rec{k,
                      feasibility,
                      stationarity,
                      tau_bar,
                      alpha,
                      batch,
                      state_.ls_iters,
                      state_.grad_evals,
                      mr.verdict.kind,
                      merit_value(tau_bar, problem_->f_true(state_.x), c),
                      delta_l};

  if (observer_) {
    observer_(IterationTrace{k, est.gbar, d, mr.solution.delta, mr.residual, c, c_l1, quad,
                             tau_prev, tau_trial, tau_bar, delta_l, alpha, batch, est.variance,
                             mr.verdict.kind});
  }

  state_.x += alpha * d;
  state_.y += alpha * mr.solution.delta;
  sampler_.observe(est, delta_l, k);
  state_.k = k + 1;
  return rec;
}

}  // namespace stochsqp
