#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "stochsqp/kkt.hpp"
#include "stochsqp/problems.hpp"
#include "stochsqp/sampling.hpp"
#include "stochsqp/types.hpp"

namespace stochsqp {

// Algorithm constants. Defaults are the reference experimental settings.
struct SqpParams {
  double tau_init = 1.0;   // initial merit parameter
  double beta = 1.0;       // step-size scaling, in (0, 1]
  double alpha_u = 100.0;  // upper step-size constant
  double eta = 0.5;        // sufficient-decrease fraction, in (0, 1)
  double omega1 = 0.5;     // reduction-split weight, in (0, 1)
  double omega2 = 0.5;     // residual-gate weight, in (0, 1)
  double omega_a = 100.0;  // residual slack in termination case (a)
  double omega_b = 100.0;  // stationarity-residual slack in case (b)
  double eps_tau = 1e-4;   // merit-parameter decrease factor, in (0, 1)
  double sigma = 2.0;      // step-size exponent, in (0, 4)
  double theta1 = 0.99;    // sampling accuracy constant
  double eps_d = 1e-2;     // curvature floor multiplier

  double minres_tol = 1e-8;   // relative residual stop for the inner solver
  long minres_max_iters = 0;  // 0 picks 4*(n+m) at solve time
  bool strict_case_a = false; // extra descent gate on case (a) when ||c||_1 > 0

  long max_outer_iters = 1000000;
  long grad_eval_budget = 1024000;  // cumulative sampled-gradient cap
  long ls_iter_budget = 102400;     // cumulative inner-iteration cap

  long batch_init = 2;           // starting sample size for growing schedules
  long batch_cap = 0;            // 0 picks N (finite sums) or 1024
  double predetermined_base = 2.0;
  double predetermined_nu = 1.5;

  void validate() const;  // ContractViolation naming the offending field
};

// phi(x, tau) = tau * f + ||c||_1.
double merit_value(double tau, double f, const Vector& c);

// Delta l(x, tau, gbar, d) = -tau * gbar^T d + ||c||_1 - ||c + J d||_1.
double model_reduction(double tau, const Vector& gbar, const Vector& d, const Vector& c,
                       const Matrix& J);

// max(d^T H d, eps_d ||d||_2^2), the curvature proxy used throughout.
double curvature_term(const Matrix& H, const Vector& d, double eps_d);

// Candidate merit parameter for a trial direction; +inf when the residual
// gates fail or the directional term is nonpositive.
double trial_merit_parameter(const Vector& gbar, const Vector& d, double quad, const Vector& c,
                             const ResidualPair& res, const SqpParams& p);

// Monotone update: keep tau_prev if tau_prev <= (1 - eps_tau) * tau_trial,
// else decrease to (1 - eps_tau) * tau_trial.
double update_merit_parameter(double tau_prev, double tau_trial, double eps_tau);

// Termination case (a): the model reduction at the incumbent merit parameter
// satisfies the reduction inequality and ||r||_1 <= omega_a beta^{sigma/2} dl;
// the strict variant additionally requires gbar^T d + quad <= 0 when
// ||c||_1 > 0. delta_l must be evaluated at tau_prev.
bool check_case_a(double delta_l, double tau_prev, double quad, const Vector& d, const Vector& c,
                  const ResidualPair& res, const Vector& gbar, const SqpParams& p);

// Termination case (b): both residual blocks strictly below their
// ||c||_1-proportional gates; always false at a feasible point.
bool check_case_b(const ResidualPair& res, const Vector& c, const SqpParams& p);

// Adaptive step size from the accepted direction. delta_l must be
// nonnegative; d_norm_sq must be positive (callers shortcut zero directions).
double step_size(double delta_l, double tau_bar, double L, double Gamma, double d_norm_sq,
                 double c_l1, const SqpParams& p);

struct LipschitzEstimate {
  double L;      // gradient Lipschitz constant estimate
  double Gamma;  // constraint-Jacobian Lipschitz constant estimate
};

// Difference quotients of g_true and jac along `probes` random directions of
// length 1e-4 * max(1, ||x0||_2); both floored at 1e-8.
LipschitzEstimate estimate_lipschitz(const Problem& problem, const Vector& x0, Rng& rng,
                                     int probes = 10);

struct SqpState {
  Vector x;
  Vector y;
  double tau_bar;
  long k = 0;
  long grad_evals = 0;
  long ls_iters = 0;
  double L = 0.0;
  double Gamma = 0.0;
};

struct IterationRecord {
  long k;
  double feasibility;   // ||c(x_k)||_inf before the step
  double stationarity;  // ||g_true + J^T y_ls||_inf at x_k, least-squares y
  double tau_bar;       // merit parameter after this iteration's update
  double alpha;
  long batch;
  long ls_iters_cum;
  long grad_evals_cum;
  TerminationCase kind;
  double merit;    // tau_bar * f_true(x_k) + ||c(x_k)||_1
  double delta_l;  // model reduction of the accepted direction at tau_bar
};

// Full per-iteration evidence handed to an observer; vectors are only valid
// during the callback.
struct IterationTrace {
  long k;
  const Vector& gbar;
  const Vector& d;
  const Vector& delta;
  const ResidualPair& res;
  const Vector& c;
  double c_l1;
  double quad;
  double tau_prev;
  double tau_trial;
  double tau_bar;
  double delta_l;
  double alpha;
  long batch;
  double variance;
  TerminationCase kind;
};

// One solver instance: owns the iterate, the merit parameter, the sampling
// schedule, and the rng stream. Problems are shared and immutable.
class SqpEngine {
 public:
  SqpEngine(ProblemPtr problem, SqpParams params, SamplingController sampler,
            std::uint64_t seed, std::optional<Matrix> hessian = std::nullopt);

  // Runs iteration state().k. ls_allowance caps this iteration's inner solver
  // work (the run driver threads the remaining budget through).
  IterationRecord step(long ls_allowance = std::numeric_limits<long>::max());

  const SqpState& state() const { return state_; }
  const SqpParams& params() const { return params_; }
  long next_batch() const { return sampler_.current(); }
  bool exact_mode() const { return exact_mode_; }
  // Exact mode disables the early-termination predicate; the inner solver
  // runs to its tolerance and every iteration reports a fallback verdict.
  void set_exact_mode(bool on) { exact_mode_ = on; }
  double min_jac_sigma() const { return min_jac_sigma_; }
  void set_observer(std::function<void(const IterationTrace&)> obs) { observer_ = std::move(obs); }

 private:
  ProblemPtr problem_;
  SqpParams params_;
  SamplingController sampler_;
  Rng rng_;
  Matrix H_;
  SqpState state_;
  bool exact_mode_ = false;
  double min_jac_sigma_ = std::numeric_limits<double>::infinity();
  std::function<void(const IterationTrace&)> observer_;
};

}  // namespace stochsqp
