#include "stochsqp/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stochsqp/errors.hpp"
#include "stochsqp/kkt.hpp"

namespace stochsqp {

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

char case_char(TerminationCase kind) {
  switch (kind) {
    case TerminationCase::kCaseA: return 'A';
    case TerminationCase::kCaseB: return 'B';
    case TerminationCase::kFallback: return 'F';
  }
  return '?';
}

TerminationCase case_from(const std::string& s, std::size_t line) {
  if (s == "A") return TerminationCase::kCaseA;
  if (s == "B") return TerminationCase::kCaseB;
  if (s == "F") return TerminationCase::kFallback;
  throw SchemaError("line " + std::to_string(line) + ": unknown case token '" + s + "'");
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw SchemaError("line " + std::to_string(line) + ": bad " + std::string(what) + " '" + s +
                      "'");
  }
  return v;
}

long parse_long(const std::string& s, std::size_t line, const char* what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw SchemaError("line " + std::to_string(line) + ": bad " + std::string(what) + " '" + s +
                      "'");
  }
  return v;
}

const char* kRunHeader =
    "run_id,problem,solver,seed,k,feasibility,stationarity,tau_bar,alpha,batch,ls_iters_cum,"
    "grad_evals_cum,case,merit,delta_l";

const char* metric_name(ProfileMetric m) {
  return m == ProfileMetric::kFeasibility ? "feasibility" : "stationarity";
}
const char* cost_name(ProfileCost c) {
  return c == ProfileCost::kGradEvals ? "grad_evals" : "ls_iters";
}

}  // namespace

VariantSpec parse_variant(const std::string& name) {
  const std::size_t dash = name.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == name.size()) {
    throw ContractViolation("variant '" + name +
                            "' must be <exact|inexact>-<fixed<k>|fixedN|adaptive|predetermined>");
  }
  std::string first = name.substr(0, dash);
  std::string second = name.substr(dash + 1);
  const auto is_exactness = [](const std::string& s) { return s == "exact" || s == "inexact"; };
  std::string exactness, sampling;
  if (is_exactness(first)) {
    exactness = first;
    sampling = second;
  } else if (is_exactness(second)) {
    exactness = second;
    sampling = first;
  } else {
    throw ContractViolation("variant '" + name + "': one part must be 'exact' or 'inexact'");
  }

  VariantSpec v;
  v.exact = exactness == "exact";
  if (sampling == "adaptive") {
    v.mode = SamplingMode::kAdaptive;
  } else if (sampling == "predetermined") {
    v.mode = SamplingMode::kPredetermined;
  } else if (sampling.rfind("fixed", 0) == 0 && sampling.size() > 5) {
    v.mode = SamplingMode::kFixed;
    const std::string size = sampling.substr(5);
    if (size == "N") {
      v.fixed_size = -1;
    } else {
      char* end = nullptr;
      const long parsed = std::strtol(size.c_str(), &end, 10);
      if (end == size.c_str() || *end != '\0' || parsed < 1) {
        throw ContractViolation("variant '" + name + "': fixed size must be a positive integer");
      }
      v.fixed_size = parsed;
    }
  } else {
    throw ContractViolation("variant '" + name + "': unknown sampling mode '" + sampling + "'");
  }
  return v;
}

std::string canonical_variant(const VariantSpec& v) {
  std::string out = v.exact ? "exact-" : "inexact-";
  switch (v.mode) {
    case SamplingMode::kFixed:
      out += v.fixed_size < 0 ? "fixedN" : "fixed" + std::to_string(v.fixed_size);
      break;
    case SamplingMode::kAdaptive:
      out += "adaptive";
      break;
    case SamplingMode::kPredetermined:
      out += "predetermined";
      break;
  }
  return out;
}

void RunConfig::validate() const {
  if (problem_id.empty()) throw ContractViolation("RunConfig: problem_id is empty");
  parse_variant(variant);
  params.validate();
  if (max_epochs < 1) throw ContractViolation("RunConfig: max_epochs must be >= 1");
}

std::string RunConfig::run_id() const {
  return problem_id + "__" + variant + "__s" + std::to_string(seed);
}

long RunConfig::effective_grad_cap(std::optional<long> sample_count) const {
  const long nominal = sample_count.value_or(1024);
  const long limit = std::numeric_limits<long>::max() / std::max(nominal, 1L);
  const long epoch_cap = max_epochs > limit ? std::numeric_limits<long>::max()
                                            : max_epochs * nominal;
  return std::min(params.grad_eval_budget, epoch_cap);
}

double feasibility_error(const Vector& c) {
  return c.size() == 0 ? 0.0 : c.lpNorm<Eigen::Infinity>();
}

double stationarity_error(const Vector& g_true, const Matrix& J) {
  const Vector y = least_squares_multipliers(J, g_true);
  return (g_true + J.transpose() * y).lpNorm<Eigen::Infinity>();
}

namespace {

SamplingController make_controller(const VariantSpec& v, const SqpParams& p,
                                   std::optional<long> N) {
  const long nominal = N.value_or(1024);
  long cap = p.batch_cap > 0 ? p.batch_cap : nominal;
  if (N.has_value()) cap = std::min(cap, *N);
  switch (v.mode) {
    case SamplingMode::kFixed: {
      long size = v.fixed_size < 0 ? nominal : v.fixed_size;
      if (N.has_value()) size = std::min(size, *N);
      return SamplingController::fixed(size);
    }
    case SamplingMode::kAdaptive:
      return SamplingController::adaptive(std::min(p.batch_init, cap), cap, p.theta1, p.beta,
                                          p.sigma);
    case SamplingMode::kPredetermined:
      return SamplingController::predetermined(p.predetermined_base, p.predetermined_nu, cap);
  }
  throw ContractViolation("make_controller: unreachable");
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, ProblemPtr problem,
                         std::function<void(const IterationTrace&)> observer) {
  cfg.validate();
  if (!problem) throw ContractViolation("run_experiment: problem is null");

  const VariantSpec variant = parse_variant(cfg.variant);
  const std::optional<long> N = problem->sample_count();
  SamplingController controller = make_controller(variant, cfg.params, N);
  SqpEngine engine(problem, cfg.params, controller, cfg.seed);
  engine.set_exact_mode(variant.exact);
  if (observer) engine.set_observer(std::move(observer));

  const long grad_cap = cfg.effective_grad_cap(N);
  const long nominal = N.value_or(1024);

  RunResult result;
  RunRecord& rec = result.record;
  rec.config = cfg;
  rec.config.variant = canonical_variant(variant);
  rec.n = problem->n();
  rec.m = problem->m();
  rec.sample_count = N;

  while (true) {
    if (engine.state().k >= cfg.params.max_outer_iters) {
      rec.terminal_reason = "max_iters";
      break;
    }
    const long next = engine.next_batch();
    if (engine.state().grad_evals + next > grad_cap) {
      const bool epoch_binds = cfg.max_epochs * nominal < cfg.params.grad_eval_budget;
      rec.terminal_reason = epoch_binds ? "epoch_budget" : "grad_budget";
      break;
    }
    const long ls_left = cfg.params.ls_iter_budget - engine.state().ls_iters;
    if (ls_left <= 0) {
      rec.terminal_reason = "ls_budget";
      break;
    }
    try {
      rec.iterations.push_back(engine.step(ls_left));
    } catch (const std::exception& e) {
      rec.terminal_reason = "solver_error";
      rec.error_message = e.what();
      break;
    }
  }
  rec.min_jac_sigma = std::isfinite(engine.min_jac_sigma()) ? engine.min_jac_sigma() : 0.0;
  result.x_final = engine.state().x;
  result.y_final = engine.state().y;
  return result;
}

const IterationRecord& select_profile_point(const RunRecord& rec) {
  if (rec.iterations.empty()) {
    throw ContractViolation("select_profile_point: record " + rec.config.run_id() + " is empty");
  }
  constexpr double kFeasible = 1e-6;
  const IterationRecord* best = nullptr;
  bool best_feasible = false;
  for (const IterationRecord& it : rec.iterations) {
    const bool feasible = it.feasibility <= kFeasible;
    if (best == nullptr) {
      best = &it;
      best_feasible = feasible;
      continue;
    }
    if (feasible) {
      if (!best_feasible || it.stationarity < best->stationarity) {
        best = &it;
        best_feasible = true;
      }
    } else if (!best_feasible && it.feasibility < best->feasibility) {
      best = &it;
    }
  }
  return *best;
}

X0Metrics x0_metrics_from_records(const std::vector<RunRecord>& records) {
  X0Metrics out;
  for (const RunRecord& rec : records) {
    if (rec.iterations.empty()) {
      throw ContractViolation("x0 metrics: record " + rec.config.run_id() + " is empty");
    }
    const IterationRecord& first = rec.iterations.front();
    if (first.k != 0) {
      throw ContractViolation("x0 metrics: record " + rec.config.run_id() +
                              " does not start at iteration 0");
    }
    const auto key = std::make_pair(rec.config.problem_id, rec.config.seed);
    const PointMetrics pm{first.feasibility, first.stationarity};
    auto [it, inserted] = out.emplace(key, pm);
    if (!inserted) {
      const auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
      };
      if (!close(it->second.feasibility, pm.feasibility) ||
          !close(it->second.stationarity, pm.stationarity)) {
        throw ContractViolation("x0 metrics: inconsistent initial point for problem " +
                                rec.config.problem_id + " seed " +
                                std::to_string(rec.config.seed));
      }
    }
  }
  return out;
}

std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records,
                                              const ProfileSpec& spec, const X0Metrics& x0) {
  if (!(spec.eps_pp > 0.0 && spec.eps_pp < 1.0)) {
    throw ContractViolation("performance_profile: eps_pp must lie in (0, 1)");
  }
  using Key = std::pair<std::string, std::uint64_t>;
  std::map<Key, std::map<std::string, const RunRecord*>> table;
  std::set<std::string> solvers;
  for (const RunRecord& rec : records) {
    const Key key{rec.config.problem_id, rec.config.seed};
    if (!table[key].emplace(rec.config.variant, &rec).second) {
      throw ContractViolation("performance_profile: duplicate record for problem " + key.first +
                              " seed " + std::to_string(key.second) + " solver " +
                              rec.config.variant);
    }
    solvers.insert(rec.config.variant);
  }
  if (table.empty()) throw ContractViolation("performance_profile: no records");
  for (const auto& [key, by_solver] : table) {
    for (const std::string& s : solvers) {
      if (!by_solver.count(s)) {
        throw ContractViolation("performance_profile: missing record for problem " + key.first +
                                " seed " + std::to_string(key.second) + " solver " + s);
      }
    }
  }

  const auto metric_of = [&](const IterationRecord& it) {
    return spec.metric == ProfileMetric::kFeasibility ? it.feasibility : it.stationarity;
  };
  const auto metric_of_x0 = [&](const PointMetrics& pm) {
    return spec.metric == ProfileMetric::kFeasibility ? pm.feasibility : pm.stationarity;
  };

  const std::size_t total = table.size();
  std::map<std::string, std::vector<double>> solved_costs;  // budget fractions of solved pairs
  for (const std::string& s : solvers) solved_costs[s] = {};

  for (const auto& [key, by_solver] : table) {
    const auto x0_it = x0.find(key);
    if (x0_it == x0.end()) {
      throw ContractViolation("performance_profile: missing initial-point metrics for problem " +
                              key.first + " seed " + std::to_string(key.second));
    }
    const double m0 = metric_of_x0(x0_it->second);

    std::map<std::string, const IterationRecord*> pp;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [solver, rec] : by_solver) {
      pp[solver] = &select_profile_point(*rec);
      best = std::min(best, metric_of(*pp[solver]));
    }
    for (const auto& [solver, point] : pp) {
      const bool solved = m0 - metric_of(*point) >= (1.0 - spec.eps_pp) * (m0 - best);
      if (!solved) continue;
      const RunRecord& rec = *by_solver.at(solver);
      double cost, budget;
      if (spec.cost == ProfileCost::kGradEvals) {
        cost = static_cast<double>(point->grad_evals_cum);
        budget = static_cast<double>(rec.config.effective_grad_cap(rec.sample_count));
      } else {
        cost = static_cast<double>(point->ls_iters_cum);
        budget = static_cast<double>(rec.config.params.ls_iter_budget);
      }
      solved_costs[solver].push_back(std::min(1.0, budget > 0.0 ? cost / budget : 1.0));
    }
  }

  std::vector<ProfileCurve> curves;
  for (const std::string& solver : solvers) {
    std::vector<double>& fractions = solved_costs[solver];
    std::sort(fractions.begin(), fractions.end());
    ProfileCurve curve;
    curve.solver = solver;
    curve.eps_pp = spec.eps_pp;
    curve.metric = spec.metric;
    curve.cost = spec.cost;
    curve.solved_fraction = static_cast<double>(fractions.size()) / static_cast<double>(total);
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      curve.points.emplace_back(fractions[i],
                                static_cast<double>(i + 1) / static_cast<double>(total));
    }
    curve.points.emplace_back(1.0, curve.solved_fraction);
    curves.push_back(std::move(curve));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void append_config_echo(std::ostream& out, const RunRecord& rec) {
  const RunConfig& c = rec.config;
  const SqpParams& p = c.params;
  out << "# run run_id=" << c.run_id() << " problem=" << c.problem_id << " solver=" << c.variant
      << " seed=" << c.seed << " n=" << rec.n << " m=" << rec.m
      << " N=" << (rec.sample_count ? *rec.sample_count : -1)
      << " terminal=" << rec.terminal_reason << " min_jac_sigma=" << fmt_double(rec.min_jac_sigma)
      << " max_epochs=" << c.max_epochs << " tau_init=" << fmt_double(p.tau_init)
      << " beta=" << fmt_double(p.beta) << " alpha_u=" << fmt_double(p.alpha_u)
      << " eta=" << fmt_double(p.eta) << " omega1=" << fmt_double(p.omega1)
      << " omega2=" << fmt_double(p.omega2) << " omega_a=" << fmt_double(p.omega_a)
      << " omega_b=" << fmt_double(p.omega_b) << " eps_tau=" << fmt_double(p.eps_tau)
      << " sigma=" << fmt_double(p.sigma) << " theta1=" << fmt_double(p.theta1)
      << " eps_d=" << fmt_double(p.eps_d) << " minres_tol=" << fmt_double(p.minres_tol)
      << " minres_max_iters=" << p.minres_max_iters
      << " strict_case_a=" << (p.strict_case_a ? 1 : 0)
      << " max_outer_iters=" << p.max_outer_iters << " grad_eval_budget=" << p.grad_eval_budget
      << " ls_iter_budget=" << p.ls_iter_budget << " batch_init=" << p.batch_init
      << " batch_cap=" << p.batch_cap
      << " predetermined_base=" << fmt_double(p.predetermined_base)
      << " predetermined_nu=" << fmt_double(p.predetermined_nu);
  if (!rec.error_message.empty()) out << " error=\"" << rec.error_message << '"';
  out << '\n';
}

void apply_config_token(RunRecord& rec, const std::string& key, const std::string& val,
                        std::size_t line) {
  RunConfig& c = rec.config;
  SqpParams& p = c.params;
  const auto d = [&] { return parse_double(val, line, key.c_str()); };
  const auto l = [&] { return parse_long(val, line, key.c_str()); };
  if (key == "run_id") return;  // derived from the other fields
  if (key == "problem") c.problem_id = val;
  else if (key == "solver") c.variant = val;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::strtoull(val.c_str(), nullptr, 10));
  else if (key == "n") rec.n = l();
  else if (key == "m") rec.m = l();
  else if (key == "N") {
    const long v = l();
    rec.sample_count = v < 0 ? std::optional<long>{} : std::optional<long>{v};
  } else if (key == "terminal") rec.terminal_reason = val;
  else if (key == "min_jac_sigma") rec.min_jac_sigma = d();
  else if (key == "max_epochs") c.max_epochs = l();
  else if (key == "tau_init") p.tau_init = d();
  else if (key == "beta") p.beta = d();
  else if (key == "alpha_u") p.alpha_u = d();
  else if (key == "eta") p.eta = d();
  else if (key == "omega1") p.omega1 = d();
  else if (key == "omega2") p.omega2 = d();
  else if (key == "omega_a") p.omega_a = d();
  else if (key == "omega_b") p.omega_b = d();
  else if (key == "eps_tau") p.eps_tau = d();
  else if (key == "sigma") p.sigma = d();
  else if (key == "theta1") p.theta1 = d();
  else if (key == "eps_d") p.eps_d = d();
  else if (key == "minres_tol") p.minres_tol = d();
  else if (key == "minres_max_iters") p.minres_max_iters = l();
  else if (key == "strict_case_a") p.strict_case_a = l() != 0;
  else if (key == "max_outer_iters") p.max_outer_iters = l();
  else if (key == "grad_eval_budget") p.grad_eval_budget = l();
  else if (key == "ls_iter_budget") p.ls_iter_budget = l();
  else if (key == "batch_init") p.batch_init = l();
  else if (key == "batch_cap") p.batch_cap = l();
  else if (key == "predetermined_base") p.predetermined_base = d();
  else if (key == "predetermined_nu") p.predetermined_nu = d();
  else throw SchemaError("line " + std::to_string(line) + ": unknown config key '" + key + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_runs(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("write_runs: cannot open " + path + " for writing");
  out << "# stochsqp-runs v1\n";
  for (const RunRecord& rec : records) append_config_echo(out, rec);
  out << kRunHeader << '\n';
  for (const RunRecord& rec : records) {
    const std::string id = rec.config.run_id();
    for (const IterationRecord& it : rec.iterations) {
      out << id << ',' << rec.config.problem_id << ',' << rec.config.variant << ','
          << rec.config.seed << ',' << it.k << ',' << fmt_double(it.feasibility) << ','
          << fmt_double(it.stationarity) << ',' << fmt_double(it.tau_bar) << ','
          << fmt_double(it.alpha) << ',' << it.batch << ',' << it.ls_iters_cum << ','
          << it.grad_evals_cum << ',' << case_char(it.kind) << ',' << fmt_double(it.merit) << ','
          << fmt_double(it.delta_l) << '\n';
    }
  }
  if (!out) throw IoError("write_runs: write failed for " + path);
}

std::vector<RunRecord> read_runs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_runs: cannot open " + path);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != "# stochsqp-runs v1") {
    throw SchemaError(path + ": missing run-file signature line");
  }
  ++lineno;

  std::vector<RunRecord> records;
  std::map<std::string, std::size_t> by_id;

  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# run ", 0) == 0) {
      RunRecord rec;
      std::string body = line.substr(6);
      const std::size_t err = body.find(" error=\"");
      if (err != std::string::npos) {
        std::string quoted = body.substr(err + 8);
        if (quoted.empty() || quoted.back() != '"') {
          throw SchemaError("line " + std::to_string(lineno) + ": unterminated error message");
        }
        rec.error_message = quoted.substr(0, quoted.size() - 1);
        body.erase(err);
      }
      std::istringstream ts(body);
      std::string tok;
      while (ts >> tok) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) {
          throw SchemaError("line " + std::to_string(lineno) + ": bad config token '" + tok + "'");
        }
        apply_config_token(rec, tok.substr(0, eq), tok.substr(eq + 1), lineno);
      }
      by_id[rec.config.run_id()] = records.size();
      records.push_back(std::move(rec));
      continue;
    }
    if (!header_seen) {
      if (line != kRunHeader) {
        // Name the first diverging column for the error message.
        const auto want = split_csv(kRunHeader);
        const auto got = split_csv(line);
        std::string detail = "row count differs";
        for (std::size_t i = 0; i < std::min(want.size(), got.size()); ++i) {
          if (want[i] != got[i]) {
            detail = "column " + std::to_string(i + 1) + ": expected '" + want[i] + "', got '" +
                     got[i] + "'";
            break;
          }
        }
        if (want.size() != got.size() && detail == "row count differs") {
          detail = "expected " + std::to_string(want.size()) + " columns, got " +
                   std::to_string(got.size());
        }
        throw SchemaError(path + ": header mismatch (" + detail + ")");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 15) {
      throw SchemaError("line " + std::to_string(lineno) + ": expected 15 columns, got " +
                        std::to_string(cols.size()));
    }
    const auto found = by_id.find(cols[0]);
    if (found == by_id.end()) {
      throw SchemaError("line " + std::to_string(lineno) + ": run_id '" + cols[0] +
                        "' has no config echo");
    }
    IterationRecord it;
    it.k = parse_long(cols[4], lineno, "k");
    it.feasibility = parse_double(cols[5], lineno, "feasibility");
    it.stationarity = parse_double(cols[6], lineno, "stationarity");
    it.tau_bar = parse_double(cols[7], lineno, "tau_bar");
    it.alpha = parse_double(cols[8], lineno, "alpha");
    it.batch = parse_long(cols[9], lineno, "batch");
    it.ls_iters_cum = parse_long(cols[10], lineno, "ls_iters_cum");
    it.grad_evals_cum = parse_long(cols[11], lineno, "grad_evals_cum");
    it.kind = case_from(cols[12], lineno);
    it.merit = parse_double(cols[13], lineno, "merit");
    it.delta_l = parse_double(cols[14], lineno, "delta_l");
    records[found->second].iterations.push_back(it);
  }
  if (!header_seen) throw SchemaError(path + ": missing column header line");
  return records;
}

void write_profile(const std::string& path, const std::vector<ProfileCurve>& curves) {
  std::ofstream out(path);
  if (!out) throw IoError("write_profile: cannot open " + path + " for writing");
  out << "# stochsqp-profile v1\n";
  out << "solver,eps_pp,metric,cost_axis,budget_fraction,solved_fraction\n";
  for (const ProfileCurve& curve : curves) {
    for (const auto& [frac, solved] : curve.points) {
      out << curve.solver << ',' << fmt_double(curve.eps_pp) << ',' << metric_name(curve.metric)
          << ',' << cost_name(curve.cost) << ',' << fmt_double(frac) << ',' << fmt_double(solved)
          << '\n';
    }
  }
  if (!out) throw IoError("write_profile: write failed for " + path);
}

}  // namespace stochsqp
