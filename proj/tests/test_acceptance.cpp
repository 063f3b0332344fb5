// Acceptance harness: one line per criterion, nonzero exit on any failure.
// Each criterion function returns an empty string on success or a short
// failure description.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stochsqp/bench.hpp"
#include "stochsqp/errors.hpp"
#include "stochsqp/kkt.hpp"
#include "stochsqp/problems.hpp"
#include "stochsqp/sampling.hpp"
#include "stochsqp/sqp.hpp"
#include "support.hpp"

using namespace stochsqp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

// ---------------------------------------------------------------------------
// 1. Deterministic exactness on the identity-QP family.

std::string criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  int solved = 0;
  std::string first_miss;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Index n = 10 * (1 + static_cast<Index>((seed - 1) % 5));  // 10..50
    const Index m = n / 5 + 1;
    ProblemPtr prob = make_identity_qp(n, m, seed);
    if (!prob->reference_solution().has_value()) {
      return "instance " + prob->name() + " lacks a closed-form solution";
    }

    RunConfig cfg;
    cfg.problem_id = prob->name();
    cfg.variant = "exact-fixedN";
    cfg.seed = seed;
    cfg.params.max_outer_iters = 100;
    cfg.max_epochs = 1000;  // one gradient per iteration; let max_iters bind
    const RunResult res = run_experiment(cfg, prob);

    const double feas = feasibility_error(prob->c(res.x_final));
    const double stat = stationarity_error(prob->g_true(res.x_final), prob->jac(res.x_final));
    const double gap =
        (res.x_final - *prob->reference_solution()).lpNorm<Eigen::Infinity>();
    if (feas <= 1e-8 && stat <= 1e-6 && gap <= 1e-6 &&
        static_cast<long>(res.record.iterations.size()) <= 100) {
      ++solved;
    } else if (first_miss.empty()) {
      first_miss = prob->name() + ": feas " + fmt(feas) + " stat " + fmt(stat) + " gap " +
                   fmt(gap);
    }
  }
  const double secs = now_seconds(t0);
  if (solved < 19) {
    return "solved " + std::to_string(solved) + "/20 (" + first_miss + ")";
  }
  if (secs >= 5.0) return "took " + fmt(secs) + " s (budget 5 s)";
  return "";
}

// ---------------------------------------------------------------------------
// 2. MINRES equivalence with the direct solver on random KKT systems.

std::string criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 38;                             // up to 40
    const Index m = 1 + trial % std::min<Index>(n - 1, 50 - n); // n + m <= 50
    testsup::RandomKkt k = testsup::random_kkt(rng, n, m);

    std::vector<double> norms;
    TerminatePredicate never = [&](const KktSolution&, const ResidualPair& res, long) {
      norms.push_back(std::sqrt(res.rho.squaredNorm() + res.r.squaredNorm()));
      return StopCase::kNone;
    };
    const MinresResult mr = minres_solve(k.sys, k.rhs, never, 40 * (n + m), 1e-12);
    const KktSolution ref = direct_solve(k.sys, k.rhs);

    Vector got(n + m), want(n + m);
    got << mr.solution.d, mr.solution.delta;
    want << ref.d, ref.delta;
    const double rel = (got - want).norm() / std::max(1.0, want.norm());
    if (rel > 1e-8) {
      return "system " + std::to_string(trial) + ": relative error " + fmt(rel);
    }
    const double slack =
        1e-12 * std::max(1.0, std::sqrt(k.rhs.top.squaredNorm() + k.rhs.bottom.squaredNorm()));
    for (std::size_t t = 1; t < norms.size(); ++t) {
      if (norms[t] > norms[t - 1] + slack) {
        return "system " + std::to_string(trial) + ": residual rose at inner iteration " +
               std::to_string(t);
      }
    }
  }
  const double secs = now_seconds(t0);
  if (secs >= 2.0) return "took " + fmt(secs) + " s (budget 2 s)";
  return "";
}

// ---------------------------------------------------------------------------
// 3. Run-time invariants over >= 1000 logged iterations on the suite.

std::string criterion3() {
  SqpParams p;
  const double step_box = p.alpha_u * std::pow(p.beta, 2.0 - p.sigma / 2.0);
  const double residual_gate = p.omega_a * std::pow(p.beta, p.sigma / 2.0);

  long total = 0;
  std::vector<std::string> violations;
  const auto note = [&](const std::string& where, long k, const std::string& what) {
    if (violations.size() < 4) {
      violations.push_back(where + " k=" + std::to_string(k) + ": " + what);
    }
  };

  for (int noisy = 0; noisy < 2; ++noisy) {
    for (ProblemPtr base : synthetic_suite(1)) {
      ProblemPtr prob = noisy ? with_additive_noise(base, 0.1) : base;
      const std::string where = prob->name() + (noisy ? " (noisy)" : "");
      const long cap = prob->sample_count().value_or(1024);
      SamplingController ctrl = SamplingController::adaptive(
          std::min(p.batch_init, cap), cap, p.theta1, p.beta, p.sigma);
      SqpEngine eng(prob, p, ctrl, 1 + noisy);

      Vector xk, yk;
      double prev_tau = p.tau_init;
      long prev_batch = 0;
      eng.set_observer([&](const IterationTrace& t) {
        ++total;
        const double r1 = t.res.r.lpNorm<1>();
        const double scale = std::max({1.0, std::abs(t.delta_l), t.c_l1, r1});
        const bool certified = t.kind != TerminationCase::kFallback;

        if (certified) {
          const double floor =
              t.tau_bar * p.omega1 * t.quad + p.omega1 * std::max(t.c_l1, r1 - t.c_l1);
          if (!(t.delta_l + 1e-12 * scale >= floor)) {
            note(where, t.k, "reduction inequality (dl " + fmt(t.delta_l) + " < " + fmt(floor) +
                                 ")");
          }
          if (!(r1 <= residual_gate * t.delta_l + 1e-12 * scale)) {
            note(where, t.k, "residual bound (r1 " + fmt(r1) + ")");
          }
          if (!(t.delta_l >= -1e-12 * scale)) note(where, t.k, "negative model reduction");
          if (!(t.alpha > 0.0)) note(where, t.k, "zero step on a certified direction");
        }
        if (!(t.alpha >= 0.0 && t.alpha <= step_box)) {
          note(where, t.k, "step size " + fmt(t.alpha) + " outside (0, " + fmt(step_box) + "]");
        }
        if (!(t.tau_bar <= prev_tau)) note(where, t.k, "merit parameter increased");
        if (t.tau_bar < prev_tau && std::isfinite(t.tau_trial) &&
            !(t.tau_bar <= (1.0 - p.eps_tau) * t.tau_trial * (1.0 + 1e-15))) {
          note(where, t.k, "merit update above the trial bound");
        }
        if (t.kind == TerminationCase::kCaseB && !(t.c_l1 > 0.0)) {
          note(where, t.k, "case (b) at a feasible point");
        }
        if (!(t.batch >= prev_batch)) note(where, t.k, "batch size shrank");

        // Residual consistency against exact recomputation (H = I).
        const Matrix J = prob->jac(xk);
        const Vector rho = t.d + J.transpose() * (t.delta + yk) + t.gbar;
        const Vector rr = J * t.d + t.c;
        const double rtol =
            1e-10 * std::max(1.0, t.gbar.lpNorm<Eigen::Infinity>() +
                                      t.d.lpNorm<Eigen::Infinity>() +
                                      t.delta.lpNorm<Eigen::Infinity>() +
                                      yk.lpNorm<Eigen::Infinity>() +
                                      t.c.lpNorm<Eigen::Infinity>());
        if ((rho - t.res.rho).lpNorm<Eigen::Infinity>() > rtol ||
            (rr - t.res.r).lpNorm<Eigen::Infinity>() > rtol) {
          note(where, t.k, "residual identity drift");
        }
        prev_tau = t.tau_bar;
        prev_batch = t.batch;
      });

      for (int k = 0; k < 60; ++k) {
        xk = eng.state().x;
        yk = eng.state().y;
        try {
          eng.step();
        } catch (const std::exception& e) {
          note(where, k, std::string("solver error: ") + e.what());
          break;
        }
      }
    }
  }
  if (total < 1000) return "only " + std::to_string(total) + " iterations logged";
  if (!violations.empty()) {
    return std::to_string(violations.size()) + "+ violations; first: " + violations.front();
  }
  return "";
}

// ---------------------------------------------------------------------------
// 4. Formula unit oracles (hand-evaluated examples).

std::string criterion4() {
  std::vector<std::string> misses;
  const auto expect = [&](bool ok, const char* what) {
    if (!ok && misses.size() < 4) misses.emplace_back(what);
  };
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  SqpParams p;

  expect(merit_value(1.0, 2.0, vec({1.0, -1.0})) == 4.0, "merit (1, 2, (1,-1)) = 4");
  expect(merit_value(0.5, 0.0, vec({3.0})) == 3.0, "merit (0.5, 0, (3)) = 3");

  const Matrix J = (Matrix(1, 2) << 0.0, 1.0).finished();
  expect(model_reduction(1.0, vec({1.0, 0.0}), vec({-1.0, 0.0}), vec({2.0}), J) == 1.0,
         "model reduction hand case = 1");
  {
    Rng rng(4);
    const Matrix Jr = testsup::random_full_rank(rng, 3, 6);
    const Vector c = testsup::random_vector(rng, 3);
    const Vector g = testsup::random_vector(rng, 6);
    const Vector d = Jr.transpose() * (Jr * Jr.transpose()).ldlt().solve(-c);
    const double want = -0.375 * g.dot(d) + c.lpNorm<1>();
    expect(std::abs(model_reduction(0.375, g, d, c, Jr) - want) <= 1e-12 * std::abs(want),
           "exact-solve reduction identity");
  }

  expect(trial_merit_parameter(vec({0.1}), vec({-1.0}), 0.0, vec({1.0}),
                               {vec({0.0}), vec({0.0})}, p) == kInf,
         "trial tau: nonpositive directional term");
  expect(trial_merit_parameter(vec({1.0}), vec({1.0}), 0.0, vec({2.0}),
                               {vec({0.0}), vec({0.1})}, p) == 0.5,
         "trial tau hand case = 0.5");
  expect(trial_merit_parameter(vec({-5.0}), vec({1.0}), 0.0, vec({1.0}),
                               {vec({0.0}), vec({0.3})}, p) == kInf,
         "trial tau residual gate");

  expect(update_merit_parameter(0.5, 1.0, 1e-4) == 0.5, "tau update keeps 0.5");
  expect(update_merit_parameter(0.7, kInf, 1e-4) == 0.7, "tau update with infinite trial");
  expect(near(update_merit_parameter(1.0, 0.5, 1e-4), 0.49995), "tau update to 0.49995");

  expect(check_case_a(0.0, 1.0, 0.0, vec({0.0}), vec({0.0}), {vec({0.0}), vec({0.0})},
                      vec({0.0}), p),
         "case (a) at the stationary feasible point");
  {
    SqpParams q = p;
    q.omega_a = 0.1;
    expect(check_case_a(1.0, 1.0, 0.0, vec({1.0}), vec({0.0}), {vec({0.0}), vec({0.1})},
                        vec({0.0}), q),
           "case (a) boundary holds at equality");
    expect(!check_case_a(1.0, 1.0, 0.0, vec({1.0}), vec({0.0}),
                         {vec({0.0}), vec({0.1 + 1e-6})}, vec({0.0}), q),
           "case (a) boundary fails just above");
  }

  expect(!check_case_b({vec({0.0}), vec({0.0})}, vec({0.0}), p), "case (b) false at c = 0");
  expect(check_case_b({vec({1.0}), vec({0.4})}, vec({2.0}), p),
         "case (b) reference-parameter instance");
  expect(!check_case_b({vec({200.0}), vec({0.4})}, vec({2.0}), p), "case (b) strict boundary");

  expect(step_size(10.0, 1.0, 1.0, 0.0, 1.0, 0.0, p) == 1.0, "step size saturates at 1");
  expect(near(step_size(0.1, 1.0, 1.0, 0.0, 1.0, 1.0, p), 0.1), "step size 0.1 case");

  {
    GradientEstimate est{Vector(), 8.0, 4};
    expect(!norm_test(est, 0.5, 0.99, 1.0, 2.0), "accuracy test fails at |S| = 4");
    est.sample_size = 17;
    expect(norm_test(est, 0.5, 0.99, 1.0, 2.0), "accuracy test passes at |S| = 17");
    est.sample_size = 4;
    expect(next_sample_size(est, 0.5, 0.99, 1.0, 2.0, 1024) == 17, "growth rule gives 17");
  }
  expect(predetermined_size(3, 2.0, 1.5, 1024) == 16, "polynomial schedule k=3 gives 16");

  if (!misses.empty()) {
    return std::to_string(misses.size()) + "+ oracle misses; first: " + misses.front();
  }
  return "";
}

// ---------------------------------------------------------------------------
// 5. Qualitative reproduction on the constrained logistic problem.

std::string criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  ProblemPtr prob =
      build_logistic_problem("logit200", synthetic_logistic_dataset(200, 10, 1), 3, 1);

  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig adaptive;
    adaptive.problem_id = prob->name();
    adaptive.variant = "inexact-adaptive";
    adaptive.seed = seed;
    RunConfig fixed2 = adaptive;
    fixed2.variant = "inexact-fixed2";

    const RunResult ra = run_experiment(adaptive, prob);
    const RunResult rf = run_experiment(fixed2, prob);
    if (ra.record.iterations.empty() || rf.record.iterations.empty()) {
      return "empty run on seed " + std::to_string(seed);
    }

    bool hit = false;
    long prev_batch = 0;
    for (const IterationRecord& it : ra.record.iterations) {
      if (it.feasibility <= 1e-6 && it.stationarity <= 1e-2) hit = true;
      if (it.batch < prev_batch) {
        return "batch shrank on seed " + std::to_string(seed);
      }
      prev_batch = it.batch;
    }
    if (ra.record.iterations.front().batch != 2) {
      return "batch does not start at 2 on seed " + std::to_string(seed);
    }
    if (!hit) {
      return "thresholds missed on seed " + std::to_string(seed) + " (final feas " +
             fmt(ra.record.iterations.back().feasibility) + ", stat " +
             fmt(ra.record.iterations.back().stationarity) + ")";
    }
    // Both runs exhaust the same 50-epoch budget; compare end-of-budget
    // stationarity.
    if (ra.record.iterations.back().stationarity <= rf.record.iterations.back().stationarity) {
      ++wins;
    }
  }
  const double secs = now_seconds(t0);
  if (wins < 7) return "adaptive beat fixed-2 on only " + std::to_string(wins) + "/10 seeds";
  if (secs >= 30.0) return "took " + fmt(secs) + " s (budget 30 s)";
  return "";
}

// ---------------------------------------------------------------------------
// 6. Additive-noise sampling statistics.

std::string criterion6() {
  ProblemPtr base = make_identity_qp(6, 2, 3);
  ProblemPtr noisy = with_additive_noise(base, 0.1);
  const Vector x = base->x0();
  const Vector mean_true = noisy->g_true(x);
  const Index n = noisy->n();

  const long draws = 100000;
  Rng rng(777);
  Vector sum = Vector::Zero(n);
  Vector sumsq = Vector::Zero(n);
  for (long i = 0; i < draws; ++i) {
    const Vector g = noisy->g_sample(x, 0, rng);
    sum += g;
    sumsq += g.cwiseProduct(g);
  }
  const Vector mean = sum / static_cast<double>(draws);
  const double se = std::sqrt(0.1 / static_cast<double>(draws));
  for (Index i = 0; i < n; ++i) {
    const double var =
        (sumsq(i) - draws * mean(i) * mean(i)) / static_cast<double>(draws - 1);
    if (std::abs(var - 0.1) > 0.05 * 0.1) {
      return "component " + std::to_string(i) + " variance " + fmt(var);
    }
    if (std::abs(mean(i) - mean_true(i)) > 4.0 * se) {
      return "component " + std::to_string(i) + " mean off by " +
             fmt(std::abs(mean(i) - mean_true(i))) + " (4 se = " + fmt(4.0 * se) + ")";
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 7. Profile machinery against brute-force rule evaluation.

namespace profile_oracle {

IterationRecord row(long k, double feas, double stat, long grad_cum, long ls_cum) {
  IterationRecord it{};
  it.k = k;
  it.feasibility = feas;
  it.stationarity = stat;
  it.tau_bar = 1.0;
  it.alpha = 0.5;
  it.batch = 2;
  it.ls_iters_cum = ls_cum;
  it.grad_evals_cum = grad_cum;
  it.kind = TerminationCase::kCaseA;
  it.merit = 1.0;
  it.delta_l = 0.1;
  return it;
}

RunRecord record(const std::string& problem, const std::string& solver, std::uint64_t seed,
                 double final_feas, double final_stat, long grad_cum) {
  RunRecord rec;
  rec.config.problem_id = problem;
  rec.config.variant = solver;
  rec.config.seed = seed;
  rec.n = 2;
  rec.m = 1;
  rec.sample_count = 100;
  rec.terminal_reason = "grad_budget";
  rec.iterations = {row(0, 0.5, 1.0, 2, 1), row(1, 0.1, 0.7, 50, 10),
                    row(2, final_feas, final_stat, grad_cum, grad_cum / 10)};
  return rec;
}

// Independent replay of the selection and solved rules.
const IterationRecord& brute_pp(const RunRecord& rec) {
  const IterationRecord* best = nullptr;
  for (const IterationRecord& it : rec.iterations) {
    if (it.feasibility <= 1e-6 && (best == nullptr || it.stationarity < best->stationarity)) {
      best = &it;
    }
  }
  if (best == nullptr) {
    for (const IterationRecord& it : rec.iterations) {
      if (best == nullptr || it.feasibility < best->feasibility) best = &it;
    }
  }
  return *best;
}

}  // namespace profile_oracle

std::string criterion7() {
  using profile_oracle::brute_pp;
  using profile_oracle::record;

  // Final stationarity of the second solver varies per (problem, seed) so
  // the three eps levels carve out different solved sets; one pair is left
  // entirely infeasible to exercise the fallback selection branch.
  std::vector<RunRecord> recs;
  const char* problems[3] = {"p", "q", "r"};
  const double bstat[6] = {5e-2, 5e-4, 5e-6, 2e-1, 1e-6, 3e-1};
  int pair = 0;
  for (const char* problem : problems) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed, ++pair) {
      recs.push_back(record(problem, "solverA", seed, 1e-8, 0.0, 400));
      if (pair == 5) {
        // all rows infeasible for both solvers on this pair
        recs.back().iterations = {profile_oracle::row(0, 0.5, 1.0, 2, 1),
                                  profile_oracle::row(1, 0.4, 0.9, 100, 10)};
        recs.push_back(record(problem, "solverB", seed, 1e-8, bstat[pair], 800));
        recs.back().iterations = {profile_oracle::row(0, 0.5, 1.0, 2, 1),
                                  profile_oracle::row(1, 0.2, 0.9, 100, 10)};
      } else {
        recs.push_back(record(problem, "solverB", seed, 1e-8, bstat[pair], 800));
      }
    }
  }
  const X0Metrics x0 = x0_metrics_from_records(recs);

  for (double eps : {1e-1, 1e-3, 1e-5}) {
    for (ProfileMetric metric : {ProfileMetric::kFeasibility, ProfileMetric::kStationarity}) {
      for (ProfileCost cost : {ProfileCost::kGradEvals, ProfileCost::kLsIters}) {
        const ProfileSpec spec{eps, metric, cost};
        const std::vector<ProfileCurve> curves = performance_profile(recs, spec, x0);

        // Brute force: group by (problem, seed), replay the quoted rules.
        std::map<std::string, std::vector<double>> solved_costs;
        std::map<std::pair<std::string, std::uint64_t>, std::vector<const RunRecord*>> groups;
        for (const RunRecord& rec : recs) {
          groups[{rec.config.problem_id, rec.config.seed}].push_back(&rec);
        }
        const auto metric_of = [&](const IterationRecord& it) {
          return metric == ProfileMetric::kFeasibility ? it.feasibility : it.stationarity;
        };
        for (const auto& [key, group] : groups) {
          const IterationRecord& first = group.front()->iterations.front();
          const double m0 =
              metric == ProfileMetric::kFeasibility ? first.feasibility : first.stationarity;
          double best = kInf;
          for (const RunRecord* rec : group) best = std::min(best, metric_of(brute_pp(*rec)));
          for (const RunRecord* rec : group) {
            const IterationRecord& pp = brute_pp(*rec);
            if (m0 - metric_of(pp) >= (1.0 - eps) * (m0 - best)) {
              const double c = cost == ProfileCost::kGradEvals
                                   ? static_cast<double>(pp.grad_evals_cum) /
                                         static_cast<double>(rec->config.effective_grad_cap(
                                             rec->sample_count))
                                   : static_cast<double>(pp.ls_iters_cum) /
                                         static_cast<double>(rec->config.params.ls_iter_budget);
              solved_costs[rec->config.variant].push_back(std::min(1.0, c));
            }
          }
        }

        for (const ProfileCurve& curve : curves) {
          std::vector<double>& want = solved_costs[curve.solver];
          std::sort(want.begin(), want.end());
          const double want_fraction = static_cast<double>(want.size()) / 6.0;
          if (curve.solved_fraction != want_fraction) {
            return curve.solver + " eps " + fmt(eps) + ": fraction " +
                   fmt(curve.solved_fraction) + " != " + fmt(want_fraction);
          }
          if (curve.points.size() != want.size() + 1) {
            return curve.solver + " eps " + fmt(eps) + ": curve length mismatch";
          }
          for (std::size_t i = 0; i < want.size(); ++i) {
            if (curve.points[i].first != want[i] ||
                curve.points[i].second != static_cast<double>(i + 1) / 6.0) {
              return curve.solver + " eps " + fmt(eps) + ": curve point " + std::to_string(i) +
                     " mismatch";
            }
          }
          if (curve.points.back() != std::pair{1.0, want_fraction}) {
            return curve.solver + " eps " + fmt(eps) + ": closing point mismatch";
          }
        }
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 8. Budget exactness and epoch accounting.

std::string criterion8() {
  ProblemPtr logit =
      build_logistic_problem("logit32", synthetic_logistic_dataset(32, 5, 2), 1, 2);
  ProblemPtr qp = make_identity_qp(10, 2, 1);

  for (const ProblemPtr& prob : {logit, qp}) {
    for (const char* variant :
         {"inexact-adaptive", "inexact-fixed2", "inexact-fixedN", "inexact-predetermined"}) {
      for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        RunConfig cfg;
        cfg.problem_id = prob->name();
        cfg.variant = variant;
        cfg.seed = seed;
        cfg.params.grad_eval_budget = 500;
        cfg.params.ls_iter_budget = 300;
        const RunResult res = run_experiment(cfg, prob);
        const long cap = cfg.effective_grad_cap(prob->sample_count());
        for (const IterationRecord& it : res.record.iterations) {
          if (it.grad_evals_cum > cap) {
            return res.record.config.run_id() + ": gradient budget exceeded (" +
                   std::to_string(it.grad_evals_cum) + " > " + std::to_string(cap) + ")";
          }
          if (it.ls_iters_cum > cfg.params.ls_iter_budget) {
            return res.record.config.run_id() + ": inner-iteration budget exceeded";
          }
        }
      }
    }
  }

  // Full-batch epochs on a finite sum: gradients per iteration are exactly N,
  // so epochs = cumulative gradients / N = iteration count.
  RunConfig full;
  full.problem_id = logit->name();
  full.variant = "inexact-fixedN";
  full.seed = 1;
  full.max_epochs = 5;
  const RunResult res = run_experiment(full, logit);
  const long N = *logit->sample_count();
  if (res.record.iterations.size() != 5) {
    return "expected 5 full-batch epochs, got " + std::to_string(res.record.iterations.size());
  }
  for (const IterationRecord& it : res.record.iterations) {
    if (it.grad_evals_cum != (it.k + 1) * N) {
      return "epoch accounting broke at k=" + std::to_string(it.k);
    }
  }
  if (res.record.terminal_reason != "epoch_budget") {
    return "expected epoch_budget, got " + res.record.terminal_reason;
  }
  return "";
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reproducibility of run CSVs.

std::string criterion9() {
  const auto render = [](int invocation) {
    ProblemPtr prob =
        build_logistic_problem("logit64", synthetic_logistic_dataset(64, 6, 3), 2, 3);
    RunConfig cfg;
    cfg.problem_id = prob->name();
    cfg.variant = "inexact-adaptive";
    cfg.seed = 13;
    cfg.params.grad_eval_budget = 1000;
    RunConfig exact = cfg;
    exact.variant = "exact-fixedN";

    std::vector<RunRecord> records;
    records.push_back(run_experiment(cfg, prob).record);
    records.push_back(run_experiment(exact, prob).record);
    const std::string path =
        "/tmp/stochsqp_accept9_" + std::to_string(invocation) + ".csv";
    write_runs(path, records);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::remove(path.c_str());
    return ss.str();
  };
  const std::string a = render(1);
  const std::string b = render(2);
  if (a.empty()) return "first invocation produced no bytes";
  if (a != b) return "run CSVs differ between invocations";
  return "";
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::string (*body)();
  };
  const Entry entries[] = {
      {1, "deterministic exactness on identity QPs", criterion1},
      {2, "inner solver matches the direct solver", criterion2},
      {3, "run-time invariant suite", criterion3},
      {4, "formula unit oracles", criterion4},
      {5, "qualitative adaptive-vs-fixed reproduction", criterion5},
      {6, "additive-noise statistics", criterion6},
      {7, "performance-profile machinery", criterion7},
      {8, "budget exactness and epoch accounting", criterion8},
      {9, "byte-identical reproducibility", criterion9},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    std::string detail;
    try {
      detail = e.body();
    } catch (const std::exception& ex) {
      detail = std::string("unexpected exception: ") + ex.what();
    }
    if (detail.empty()) {
      std::printf("criterion %d (%s): PASS\n", e.id, e.name);
    } else {
      std::printf("criterion %d (%s): FAIL — %s\n", e.id, e.name, detail.c_str());
      ++failures;
    }
  }
  std::printf("acceptance: %d/9 criteria passed\n", 9 - failures);
  return failures;
}
