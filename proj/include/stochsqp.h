#ifndef STOCHSQP_H
#define STOCHSQP_H

/* C interface to the stochastic-SQP solver library. All functions returning
 * int use the ssqp_status codes; on failure ssqp_last_error() carries a
 * message for the calling thread. Handles are opaque and must be released
 * with their matching _free function. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ssqp_status {
  SSQP_OK = 0,
  SSQP_ERR_USAGE = 1,     /* bad arguments, unknown names, broken preconditions */
  SSQP_ERR_DATA = 2,      /* unreadable or malformed files */
  SSQP_ERR_NUMERICAL = 3  /* singular systems or non-finite values */
} ssqp_status;

/* Message and status of the most recent failure in this thread ("" and
 * SSQP_OK if none). The pointer stays valid until the next failing call on
 * the same thread. Handle constructors signal failure by returning NULL;
 * these two calls recover the cause. */
const char* ssqp_last_error(void);
int ssqp_last_status(void);

typedef struct ssqp_problem ssqp_problem;
typedef struct ssqp_params ssqp_params;
typedef struct ssqp_run ssqp_run;
typedef struct ssqp_runs ssqp_runs;

/* ---- problems ------------------------------------------------------- */

/* Built-in deterministic test family; instances depend on a seed but the
 * names do not. */
int ssqp_suite_count(void);
const char* ssqp_suite_name(int index); /* NULL if out of range */
ssqp_problem* ssqp_problem_suite(const char* name, uint64_t seed);

/* Equality-constrained logistic regression over a LIBSVM-format file:
 * `linear_constraints` random linear equations plus one norm constraint.
 * Pass a negative count for the default of ceil(n/4) linear equations. */
ssqp_problem* ssqp_problem_logistic(const char* libsvm_path, const char* name,
                                    long linear_constraints, uint64_t seed);

/* min 0.5 x'x + q'x s.t. Ax = b with known solution (for exactness studies). */
ssqp_problem* ssqp_problem_identity_qp(long n, long m, uint64_t seed);

/* Derives a problem whose sampled gradients are the true gradient plus
 * Normal(0, eps) noise per component; the sample space becomes unbounded. */
ssqp_problem* ssqp_problem_noise(const ssqp_problem* base, double eps);

void ssqp_problem_free(ssqp_problem* p);

const char* ssqp_problem_name(const ssqp_problem* p);
long ssqp_problem_dim(const ssqp_problem* p);
long ssqp_problem_constraints(const ssqp_problem* p);
long ssqp_problem_samples(const ssqp_problem* p); /* -1 if unbounded */

/* ---- parameters ------------------------------------------------------ */

/* Fresh handle with the documented defaults. Keys for set/get are the
 * snake_case field names (tau_init, beta, alpha_u, eta, omega1, omega2,
 * omega_a, omega_b, eps_tau, sigma, theta1, eps_d, minres_tol,
 * minres_max_iters, strict_case_a, max_outer_iters, grad_eval_budget,
 * ls_iter_budget, batch_init, batch_cap, predetermined_base,
 * predetermined_nu, max_epochs). Values are validated on set. */
ssqp_params* ssqp_params_create(void);
void ssqp_params_free(ssqp_params* p);
int ssqp_params_set(ssqp_params* p, const char* key, const char* value);
int ssqp_params_get(const ssqp_params* p, const char* key, char* buf, size_t len);

/* ---- runs ------------------------------------------------------------ */

typedef struct ssqp_iter_row {
  long k;
  double feasibility;
  double stationarity;
  double tau_bar;
  double alpha;
  long batch;
  long ls_iters_cum;
  long grad_evals_cum;
  char kind; /* 'A', 'B', or 'F' (fallback) */
  double merit;
  double delta_l;
} ssqp_iter_row;

/* Runs the solver on `problem` until a budget trips. `variant` combines
 * exactness and sampling: exact|inexact crossed with fixed<k>, fixedN,
 * adaptive, or predetermined (either word order, dash separated). A solver
 * failure still yields a run (terminal reason "solver_error"); only
 * precondition and data errors fail the call. `params` may be NULL for
 * defaults. */
int ssqp_run_new(const ssqp_problem* problem, const char* variant, uint64_t seed,
                 const ssqp_params* params, ssqp_run** out);
void ssqp_run_free(ssqp_run* r);

long ssqp_run_iterations(const ssqp_run* r);
int ssqp_run_row(const ssqp_run* r, long index, ssqp_iter_row* out);
const char* ssqp_run_terminal_reason(const ssqp_run* r);
const char* ssqp_run_error_message(const ssqp_run* r); /* "" unless solver_error */
const char* ssqp_run_id(const ssqp_run* r);
/* Copies the final iterate / multipliers; n and m must match the problem. */
int ssqp_run_solution(const ssqp_run* r, double* x, long n);
int ssqp_run_multipliers(const ssqp_run* r, double* y, long m);

/* ---- run collections and profiles ------------------------------------ */

ssqp_runs* ssqp_runs_create(void);
void ssqp_runs_free(ssqp_runs* rs);
int ssqp_runs_add(ssqp_runs* rs, const ssqp_run* r); /* copies the record */
int ssqp_runs_load(ssqp_runs* rs, const char* path); /* appends a runs CSV */
long ssqp_runs_count(const ssqp_runs* rs);
int ssqp_runs_write(const ssqp_runs* rs, const char* path);

/* Performance profiles across every (problem, seed) pair in `rs`: one curve
 * per solver for each eps value crossed with both metrics (feasibility,
 * stationarity) and both cost axes (sampled gradients, inner iterations),
 * written as one CSV. */
int ssqp_profile(const ssqp_runs* rs, const double* eps_values, int n_eps,
                 const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* STOCHSQP_H */
