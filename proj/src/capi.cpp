#include "stochsqp.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "stochsqp/bench.hpp"
#include "stochsqp/errors.hpp"
#include "stochsqp/problems.hpp"
#include "stochsqp/sqp.hpp"

using namespace stochsqp;

struct ssqp_problem {
  ProblemPtr p;
};
struct ssqp_params {
  SqpParams p;
  long max_epochs = 50;
};
struct ssqp_run {
  RunRecord record;
  Vector x;
  Vector y;
  std::string run_id;
};
struct ssqp_runs {
  std::vector<RunRecord> records;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_last_status = SSQP_OK;

int fail(int code, const char* what) {
  g_last_error = what;
  g_last_status = code;
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ContractViolation& e) {
    return fail(SSQP_ERR_USAGE, e.what());
  } catch (const ParseError& e) {
    return fail(SSQP_ERR_DATA, e.what());
  } catch (const SchemaError& e) {
    return fail(SSQP_ERR_DATA, e.what());
  } catch (const IoError& e) {
    return fail(SSQP_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SSQP_ERR_NUMERICAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SSQP_ERR_NUMERICAL, e.what());
  }
}

template <class Make>
auto guarded_new(Make&& make) -> decltype(make()) {
  decltype(make()) handle = nullptr;
  guarded([&]() {
    handle = make();
    return SSQP_OK;
  });
  return handle;
}

constexpr const char* kSuiteNames[] = {"qp10",  "rosen10",  "sphere10", "qp50",  "rosen50",
                                       "sphere50", "qp100", "rosen100", "sphere100"};
constexpr int kSuiteCount = static_cast<int>(sizeof(kSuiteNames) / sizeof(kSuiteNames[0]));

double parse_param_double(const char* key, const char* value) {
  char* end = nullptr;
  const double v = std::strtod(value, &end);
  if (end == value || *end != '\0') {
    throw ContractViolation(std::string(key) + ": expected a number, got '" + value + "'");
  }
  return v;
}

long parse_param_long(const char* key, const char* value) {
  char* end = nullptr;
  const long v = std::strtol(value, &end, 10);
  if (end == value || *end != '\0') {
    throw ContractViolation(std::string(key) + ": expected an integer, got '" + value + "'");
  }
  return v;
}

void set_param(ssqp_params& h, const std::string& key, const char* value) {
  SqpParams p = h.p;
  long epochs = h.max_epochs;
  const char* k = key.c_str();
  if (key == "tau_init") p.tau_init = parse_param_double(k, value);
  else if (key == "beta") p.beta = parse_param_double(k, value);
  else if (key == "alpha_u") p.alpha_u = parse_param_double(k, value);
  else if (key == "eta") p.eta = parse_param_double(k, value);
  else if (key == "omega1") p.omega1 = parse_param_double(k, value);
  else if (key == "omega2") p.omega2 = parse_param_double(k, value);
  else if (key == "omega_a") p.omega_a = parse_param_double(k, value);
  else if (key == "omega_b") p.omega_b = parse_param_double(k, value);
  else if (key == "eps_tau") p.eps_tau = parse_param_double(k, value);
  else if (key == "sigma") p.sigma = parse_param_double(k, value);
  else if (key == "theta1") p.theta1 = parse_param_double(k, value);
  else if (key == "eps_d") p.eps_d = parse_param_double(k, value);
  else if (key == "minres_tol") p.minres_tol = parse_param_double(k, value);
  else if (key == "minres_max_iters") p.minres_max_iters = parse_param_long(k, value);
  else if (key == "strict_case_a") p.strict_case_a = parse_param_long(k, value) != 0;
  else if (key == "max_outer_iters") p.max_outer_iters = parse_param_long(k, value);
  else if (key == "grad_eval_budget") p.grad_eval_budget = parse_param_long(k, value);
  else if (key == "ls_iter_budget") p.ls_iter_budget = parse_param_long(k, value);
  else if (key == "batch_init") p.batch_init = parse_param_long(k, value);
  else if (key == "batch_cap") p.batch_cap = parse_param_long(k, value);
  else if (key == "predetermined_base") p.predetermined_base = parse_param_double(k, value);
  else if (key == "predetermined_nu") p.predetermined_nu = parse_param_double(k, value);
  else if (key == "max_epochs") epochs = parse_param_long(k, value);
  else throw ContractViolation("unknown parameter '" + key + "'");
  p.validate();
  if (epochs < 1) throw ContractViolation("max_epochs must be >= 1");
  h.p = p;
  h.max_epochs = epochs;
}

std::string get_param(const ssqp_params& h, const std::string& key) {
  const SqpParams& p = h.p;
  const auto d = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  const auto l = [](long v) { return std::to_string(v); };
  if (key == "tau_init") return d(p.tau_init);
  if (key == "beta") return d(p.beta);
  if (key == "alpha_u") return d(p.alpha_u);
  if (key == "eta") return d(p.eta);
  if (key == "omega1") return d(p.omega1);
  if (key == "omega2") return d(p.omega2);
  if (key == "omega_a") return d(p.omega_a);
  if (key == "omega_b") return d(p.omega_b);
  if (key == "eps_tau") return d(p.eps_tau);
  if (key == "sigma") return d(p.sigma);
  if (key == "theta1") return d(p.theta1);
  if (key == "eps_d") return d(p.eps_d);
  if (key == "minres_tol") return d(p.minres_tol);
  if (key == "minres_max_iters") return l(p.minres_max_iters);
  if (key == "strict_case_a") return l(p.strict_case_a ? 1 : 0);
  if (key == "max_outer_iters") return l(p.max_outer_iters);
  if (key == "grad_eval_budget") return l(p.grad_eval_budget);
  if (key == "ls_iter_budget") return l(p.ls_iter_budget);
  if (key == "batch_init") return l(p.batch_init);
  if (key == "batch_cap") return l(p.batch_cap);
  if (key == "predetermined_base") return d(p.predetermined_base);
  if (key == "predetermined_nu") return d(p.predetermined_nu);
  if (key == "max_epochs") return l(h.max_epochs);
  throw ContractViolation("unknown parameter '" + key + "'");
}

}  // namespace

extern "C" {

const char* ssqp_last_error(void) { return g_last_error.c_str(); }

int ssqp_last_status(void) { return g_last_status; }

/* ---- problems ------------------------------------------------------- */

int ssqp_suite_count(void) { return kSuiteCount; }

const char* ssqp_suite_name(int index) {
  if (index < 0 || index >= kSuiteCount) return nullptr;
  return kSuiteNames[index];
}

ssqp_problem* ssqp_problem_suite(const char* name, uint64_t seed) {
  return guarded_new([&]() -> ssqp_problem* {
    if (name == nullptr) throw ContractViolation("suite problem name is null");
    for (ProblemPtr& p : synthetic_suite(seed)) {
      if (p->name() == name) return new ssqp_problem{std::move(p)};
    }
    throw ContractViolation("unknown suite problem '" + std::string(name) + "'");
  });
}

ssqp_problem* ssqp_problem_logistic(const char* libsvm_path, const char* name,
                                    long linear_constraints, uint64_t seed) {
  return guarded_new([&]() -> ssqp_problem* {
    if (libsvm_path == nullptr) throw ContractViolation("libsvm path is null");
    Dataset ds = load_libsvm(libsvm_path);
    std::string id = name != nullptr && name[0] != '\0' ? name : "logistic";
    const long m_lin = linear_constraints < 0 ? (ds.n() + 3) / 4 : linear_constraints;
    return new ssqp_problem{build_logistic_problem(std::move(id), std::move(ds), m_lin, seed)};
  });
}

ssqp_problem* ssqp_problem_identity_qp(long n, long m, uint64_t seed) {
  return guarded_new([&]() -> ssqp_problem* {
    return new ssqp_problem{make_identity_qp(n, m, seed)};
  });
}

ssqp_problem* ssqp_problem_noise(const ssqp_problem* base, double eps) {
  return guarded_new([&]() -> ssqp_problem* {
    if (base == nullptr) throw ContractViolation("base problem is null");
    return new ssqp_problem{with_additive_noise(base->p, eps)};
  });
}

void ssqp_problem_free(ssqp_problem* p) { delete p; }

const char* ssqp_problem_name(const ssqp_problem* p) {
  return p != nullptr ? p->p->name().c_str() : nullptr;
}
long ssqp_problem_dim(const ssqp_problem* p) { return p != nullptr ? p->p->n() : -1; }
long ssqp_problem_constraints(const ssqp_problem* p) { return p != nullptr ? p->p->m() : -1; }
long ssqp_problem_samples(const ssqp_problem* p) {
  if (p == nullptr) return -1;
  return p->p->sample_count().value_or(-1);
}

/* ---- parameters ------------------------------------------------------ */

ssqp_params* ssqp_params_create(void) { return new (std::nothrow) ssqp_params; }

void ssqp_params_free(ssqp_params* p) { delete p; }

int ssqp_params_set(ssqp_params* p, const char* key, const char* value) {
  return guarded([&]() {
    if (p == nullptr || key == nullptr || value == nullptr) {
      throw ContractViolation("ssqp_params_set: null argument");
    }
    set_param(*p, key, value);
    return SSQP_OK;
  });
}

int ssqp_params_get(const ssqp_params* p, const char* key, char* buf, size_t len) {
  return guarded([&]() {
    if (p == nullptr || key == nullptr || buf == nullptr) {
      throw ContractViolation("ssqp_params_get: null argument");
    }
    const std::string value = get_param(*p, key);
    if (value.size() + 1 > len) {
      throw ContractViolation("ssqp_params_get: buffer too small for '" + std::string(key) + "'");
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return SSQP_OK;
  });
}

/* ---- runs ------------------------------------------------------------ */

int ssqp_run_new(const ssqp_problem* problem, const char* variant, uint64_t seed,
                 const ssqp_params* params, ssqp_run** out) {
  return guarded([&]() {
    if (problem == nullptr || variant == nullptr || out == nullptr) {
      throw ContractViolation("ssqp_run_new: null argument");
    }
    *out = nullptr;
    RunConfig cfg;
    cfg.problem_id = problem->p->name();
    cfg.variant = variant;
    cfg.seed = seed;
    if (params != nullptr) {
      cfg.params = params->p;
      cfg.max_epochs = params->max_epochs;
    }
    RunResult result = run_experiment(cfg, problem->p);
    auto* run = new ssqp_run{std::move(result.record), std::move(result.x_final),
                             std::move(result.y_final), {}};
    run->run_id = run->record.config.run_id();
    *out = run;
    return SSQP_OK;
  });
}

void ssqp_run_free(ssqp_run* r) { delete r; }

long ssqp_run_iterations(const ssqp_run* r) {
  return r != nullptr ? static_cast<long>(r->record.iterations.size()) : -1;
}

int ssqp_run_row(const ssqp_run* r, long index, ssqp_iter_row* out) {
  return guarded([&]() {
    if (r == nullptr || out == nullptr) throw ContractViolation("ssqp_run_row: null argument");
    if (index < 0 || index >= static_cast<long>(r->record.iterations.size())) {
      throw ContractViolation("ssqp_run_row: index " + std::to_string(index) + " out of range");
    }
    const IterationRecord& it = r->record.iterations[static_cast<std::size_t>(index)];
    out->k = it.k;
    out->feasibility = it.feasibility;
    out->stationarity = it.stationarity;
    out->tau_bar = it.tau_bar;
    out->alpha = it.alpha;
    out->batch = it.batch;
    out->ls_iters_cum = it.ls_iters_cum;
    out->grad_evals_cum = it.grad_evals_cum;
    out->kind = it.kind == TerminationCase::kCaseA   ? 'A'
                : it.kind == TerminationCase::kCaseB ? 'B'
                                                     : 'F';
    out->merit = it.merit;
    out->delta_l = it.delta_l;
    return SSQP_OK;
  });
}

const char* ssqp_run_terminal_reason(const ssqp_run* r) {
  return r != nullptr ? r->record.terminal_reason.c_str() : nullptr;
}
const char* ssqp_run_error_message(const ssqp_run* r) {
  return r != nullptr ? r->record.error_message.c_str() : nullptr;
}
const char* ssqp_run_id(const ssqp_run* r) { return r != nullptr ? r->run_id.c_str() : nullptr; }

int ssqp_run_solution(const ssqp_run* r, double* x, long n) {
  return guarded([&]() {
    if (r == nullptr || x == nullptr) throw ContractViolation("ssqp_run_solution: null argument");
    if (n != r->x.size()) {
      throw ContractViolation("ssqp_run_solution: expected length " + std::to_string(r->x.size()));
    }
    std::memcpy(x, r->x.data(), sizeof(double) * static_cast<std::size_t>(n));
    return SSQP_OK;
  });
}

int ssqp_run_multipliers(const ssqp_run* r, double* y, long m) {
  return guarded([&]() {
    if (r == nullptr || y == nullptr) {
      throw ContractViolation("ssqp_run_multipliers: null argument");
    }
    if (m != r->y.size()) {
      throw ContractViolation("ssqp_run_multipliers: expected length " +
                              std::to_string(r->y.size()));
    }
    if (m > 0) std::memcpy(y, r->y.data(), sizeof(double) * static_cast<std::size_t>(m));
    return SSQP_OK;
  });
}

/* ---- run collections and profiles ------------------------------------ */

ssqp_runs* ssqp_runs_create(void) { return new (std::nothrow) ssqp_runs; }

void ssqp_runs_free(ssqp_runs* rs) { delete rs; }

int ssqp_runs_add(ssqp_runs* rs, const ssqp_run* r) {
  return guarded([&]() {
    if (rs == nullptr || r == nullptr) throw ContractViolation("ssqp_runs_add: null argument");
    rs->records.push_back(r->record);
    return SSQP_OK;
  });
}

int ssqp_runs_load(ssqp_runs* rs, const char* path) {
  return guarded([&]() {
    if (rs == nullptr || path == nullptr) throw ContractViolation("ssqp_runs_load: null argument");
    std::vector<RunRecord> loaded = read_runs(path);
    rs->records.insert(rs->records.end(), std::make_move_iterator(loaded.begin()),
                       std::make_move_iterator(loaded.end()));
    return SSQP_OK;
  });
}

long ssqp_runs_count(const ssqp_runs* rs) {
  return rs != nullptr ? static_cast<long>(rs->records.size()) : -1;
}

int ssqp_runs_write(const ssqp_runs* rs, const char* path) {
  return guarded([&]() {
    if (rs == nullptr || path == nullptr) {
      throw ContractViolation("ssqp_runs_write: null argument");
    }
    write_runs(path, rs->records);
    return SSQP_OK;
  });
}

int ssqp_profile(const ssqp_runs* rs, const double* eps_values, int n_eps, const char* out_path) {
  return guarded([&]() {
    if (rs == nullptr || eps_values == nullptr || out_path == nullptr) {
      throw ContractViolation("ssqp_profile: null argument");
    }
    if (n_eps < 1) throw ContractViolation("ssqp_profile: need at least one eps value");
    const X0Metrics x0 = x0_metrics_from_records(rs->records);
    std::vector<ProfileCurve> curves;
    for (int i = 0; i < n_eps; ++i) {
      for (ProfileMetric metric : {ProfileMetric::kFeasibility, ProfileMetric::kStationarity}) {
        for (ProfileCost cost : {ProfileCost::kGradEvals, ProfileCost::kLsIters}) {
          ProfileSpec spec{eps_values[i], metric, cost};
          std::vector<ProfileCurve> part = performance_profile(rs->records, spec, x0);
          curves.insert(curves.end(), std::make_move_iterator(part.begin()),
                        std::make_move_iterator(part.end()));
        }
      }
    }
    write_profile(out_path, curves);
    return SSQP_OK;
  });
}

}  // extern "C"
