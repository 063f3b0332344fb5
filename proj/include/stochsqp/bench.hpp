#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stochsqp/problems.hpp"
#include "stochsqp/sqp.hpp"

namespace stochsqp {

// How a run samples and solves. fixed_size == -1 means full batch (N for
// finite sums, the nominal 1024 otherwise).
struct VariantSpec {
  bool exact = false;
  SamplingMode mode = SamplingMode::kFixed;
  long fixed_size = -1;
};

// Accepts "exact-fixed2", "inexact-adaptive", "exact-fixedN",
// "inexact-predetermined" and the reversed word order.
VariantSpec parse_variant(const std::string& name);
std::string canonical_variant(const VariantSpec& v);

struct RunConfig {
  std::string problem_id;
  std::string variant;  // canonical form
  SqpParams params;
  std::uint64_t seed = 0;
  long max_epochs = 50;  // epochs convert to sampled gradients via N (or 1024)

  void validate() const;
  std::string run_id() const;
  // Sampled-gradient cap actually enforced: min(budget, epochs * nominal N).
  long effective_grad_cap(std::optional<long> sample_count) const;
};

struct RunRecord {
  RunConfig config;
  Index n = 0;
  Index m = 0;
  std::optional<long> sample_count;
  std::vector<IterationRecord> iterations;
  std::string terminal_reason;  // grad_budget | ls_budget | epoch_budget | max_iters | solver_error
  std::string error_message;    // set only for solver_error
  double min_jac_sigma = 0.0;   // smallest constraint-Jacobian singular value seen
};

struct RunResult {
  RunRecord record;
  Vector x_final;
  Vector y_final;
};

double feasibility_error(const Vector& c);
// Least-squares multipliers from the true gradient, then the residual's
// max-norm. Rank deficiency propagates as SingularSystemError.
double stationarity_error(const Vector& g_true, const Matrix& J);

// Iterates the solver until a budget trips. Solver failures close the run
// with terminal_reason "solver_error" and a partial record. An optional
// observer sees every iteration's full evidence (for property checks).
RunResult run_experiment(const RunConfig& cfg, ProblemPtr problem,
                         std::function<void(const IterationTrace&)> observer = nullptr);

// The claimed solution of a run: minimum stationarity among iterates with
// feasibility <= 1e-6 if any exist, otherwise minimum feasibility; earliest
// iteration wins ties. Empty records are a contract violation.
const IterationRecord& select_profile_point(const RunRecord& rec);

enum class ProfileMetric { kFeasibility, kStationarity };
enum class ProfileCost { kGradEvals, kLsIters };

struct ProfileSpec {
  double eps_pp = 0.1;  // in (0, 1)
  ProfileMetric metric = ProfileMetric::kStationarity;
  ProfileCost cost = ProfileCost::kGradEvals;
};

struct PointMetrics {
  double feasibility;
  double stationarity;
};

// (problem, seed) -> metrics of the shared initial point.
using X0Metrics = std::map<std::pair<std::string, std::uint64_t>, PointMetrics>;

// Derives initial-point metrics from the k=0 rows; inconsistent values for
// the same (problem, seed) raise a ContractViolation.
X0Metrics x0_metrics_from_records(const std::vector<RunRecord>& records);

struct ProfileCurve {
  std::string solver;
  double eps_pp;
  ProfileMetric metric;
  ProfileCost cost;
  double solved_fraction;  // scalar robustness number
  // (budget fraction at the profile point, cumulative solved fraction),
  // nondecreasing, closed by a final point at budget fraction 1.
  std::vector<std::pair<double, double>> points;
};

// A solver counts (problem, seed) as solved when
//   m(x0) - m(x_pp) >= (1 - eps_pp) * (m(x0) - m(x_b)),
// with m(x_b) the best profile-point value among the compared solvers.
// Every (problem, seed) must carry a record for every solver.
std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records,
                                              const ProfileSpec& spec, const X0Metrics& x0);

// One-row-per-iteration CSV with a config-echo header block; floats carry 17
// significant digits so a round-trip is exact.
void write_runs(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_runs(const std::string& path);

void write_profile(const std::string& path, const std::vector<ProfileCurve>& curves);

}  // namespace stochsqp
