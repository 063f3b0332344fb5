// Command-line front end. Talks to the solver exclusively through the C API
// in stochsqp.h; exit codes mirror ssqp_status (1 usage, 2 data, 3 numerical).

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "stochsqp.h"

namespace {

namespace fs = std::filesystem;

struct ParamDef {
  const char* key;
  const char* help;
};

const ParamDef kParams[] = {
    {"tau_init", "initial merit parameter (> 0)"},
    {"beta", "step-size scaling in (0, 1]"},
    {"alpha_u", "upper step-size constant (> 0)"},
    {"eta", "sufficient-decrease fraction in (0, 1)"},
    {"omega1", "reduction-split weight in (0, 1)"},
    {"omega2", "residual-gate weight in (0, 1)"},
    {"omega_a", "case-(a) residual slack (> 0)"},
    {"omega_b", "case-(b) residual slack (> 0)"},
    {"eps_tau", "merit-parameter decrease factor in (0, 1)"},
    {"sigma", "step-size exponent in (0, 4)"},
    {"theta1", "norm-test accuracy constant (> 0)"},
    {"eps_d", "curvature floor multiplier (> 0)"},
    {"minres_tol", "inner-solver relative residual tolerance"},
    {"minres_max_iters", "inner iteration cap per solve (0 = 4(n+m))"},
    {"strict_case_a", "require model descent in case (a) when infeasible (0/1)"},
    {"max_outer_iters", "outer iteration cap"},
    {"grad_eval_budget", "cumulative sampled-gradient cap"},
    {"ls_iter_budget", "cumulative inner-iteration cap"},
    {"batch_init", "starting batch size for growing schedules"},
    {"batch_cap", "batch-size cap (0 = N, or 1024 when unbounded)"},
    {"predetermined_base", "base of the predetermined batch schedule"},
    {"predetermined_nu", "exponent of the predetermined batch schedule (> 1)"},
    {"max_epochs", "epoch budget; one epoch is N sampled gradients"},
};

struct ParamsHandle {
  ssqp_params* p = ssqp_params_create();
  ~ParamsHandle() { ssqp_params_free(p); }
};

int report(int code, const std::string& context) {
  std::fprintf(stderr, "error: %s%s%s\n", ssqp_last_error(), context.empty() ? "" : " ",
               context.c_str());
  return code;
}

// Registers one string flag per solver parameter; defaults are read back from
// the library so the help table and the solver can never disagree.
void add_param_flags(CLI::App* cmd, std::map<std::string, std::string>& values) {
  ParamsHandle defaults;
  for (const ParamDef& def : kParams) {
    char buf[64];
    if (ssqp_params_get(defaults.p, def.key, buf, sizeof(buf)) != SSQP_OK) {
      std::fprintf(stderr, "internal: no default for %s\n", def.key);
      std::abort();
    }
    auto [it, inserted] = values.emplace(def.key, buf);
    cmd->add_option("--" + std::string(def.key), it->second, def.help)->capture_default_str();
  }
}

ssqp_params* build_params(const std::map<std::string, std::string>& values, ParamsHandle& h,
                          int& code) {
  for (const auto& [key, value] : values) {
    if (ssqp_params_set(h.p, key.c_str(), value.c_str()) != SSQP_OK) {
      code = report(SSQP_ERR_USAGE, "(--" + key + ")");
      return nullptr;
    }
  }
  code = SSQP_OK;
  return h.p;
}

struct ProblemFlags {
  std::string synthetic;
  std::string libsvm;
  std::vector<long> idqp;  // {n, m}
  std::string name;        // label for libsvm problems
  long mlin = -1;          // -1 = ceil(n/4)
  std::uint64_t instance_seed = 0;
  double noise = -1.0;  // < 0 = off
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f, bool single) {
  if (single) {
    cmd->add_option("--synthetic", f.synthetic, "built-in suite problem name (see bench --list)");
    cmd->add_option("--idqp", f.idqp, "identity QP with known solution: n,m")
        ->delimiter(',')
        ->expected(2);
  }
  cmd->add_option("--libsvm", f.libsvm, "LIBSVM-format dataset for constrained logistic regression");
  cmd->add_option("--name", f.name, "problem label for --libsvm runs")->default_str("logistic");
  cmd->add_option("--mlin", f.mlin, "linear constraint rows for --libsvm (-1 = ceil(n/4))")
      ->capture_default_str();
  cmd->add_option("--suite-seed", f.instance_seed, "seed for synthetic problem instances")
      ->capture_default_str();
  cmd->add_option("--noise", f.noise,
                  "wrap sampled gradients with Normal(0, eps) per-component noise");
}

using ProblemHandle = std::unique_ptr<ssqp_problem, decltype(&ssqp_problem_free)>;

ProblemHandle make_problem(const ProblemFlags& f, int& code) {
  ssqp_problem* p = nullptr;
  const int sources = (f.synthetic.empty() ? 0 : 1) + (f.libsvm.empty() ? 0 : 1) +
                      (f.idqp.empty() ? 0 : 1);
  if (sources != 1) {
    std::fprintf(stderr, "error: pick exactly one problem source "
                         "(--synthetic, --libsvm, or --idqp)\n");
    code = SSQP_ERR_USAGE;
    return {nullptr, &ssqp_problem_free};
  }
  if (!f.synthetic.empty()) {
    p = ssqp_problem_suite(f.synthetic.c_str(), f.instance_seed);
  } else if (!f.libsvm.empty()) {
    p = ssqp_problem_logistic(f.libsvm.c_str(), f.name.c_str(), f.mlin, f.instance_seed);
  } else {
    p = ssqp_problem_identity_qp(f.idqp[0], f.idqp[1], f.instance_seed);
  }
  if (p == nullptr) {
    code = report(ssqp_last_status(), "");
    return {nullptr, &ssqp_problem_free};
  }
  if (f.noise >= 0.0) {
    ssqp_problem* wrapped = ssqp_problem_noise(p, f.noise);
    ssqp_problem_free(p);
    if (wrapped == nullptr) {
      code = report(ssqp_last_status(), "(--noise)");
      return {nullptr, &ssqp_problem_free};
    }
    p = wrapped;
  }
  code = SSQP_OK;
  return {p, &ssqp_problem_free};
}

int ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s: %s\n", out.c_str(),
                 ec.message().c_str());
    return SSQP_ERR_DATA;
  }
  return SSQP_OK;
}

int write_single_run(const ssqp_run* run, const std::string& out, std::string& path) {
  ssqp_runs* rs = ssqp_runs_create();
  if (ssqp_runs_add(rs, run) != SSQP_OK) {
    ssqp_runs_free(rs);
    return report(SSQP_ERR_USAGE, "");
  }
  path = out + "/" + ssqp_run_id(run) + ".csv";
  const int rc = ssqp_runs_write(rs, path.c_str());
  ssqp_runs_free(rs);
  return rc == SSQP_OK ? SSQP_OK : report(rc, "(" + path + ")");
}

unsigned worker_count(std::size_t tasks) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("STOCH_SQP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
  }
  if (tasks < n) n = static_cast<unsigned>(tasks);
  return n == 0 ? 1 : n;
}

int run_solve(const ProblemFlags& pf, const std::map<std::string, std::string>& param_values,
              const std::string& variant, std::uint64_t seed, const std::string& out) {
  int code = SSQP_OK;
  ProblemHandle problem = make_problem(pf, code);
  if (!problem) return code;
  ParamsHandle ph;
  ssqp_params* params = build_params(param_values, ph, code);
  if (params == nullptr) return code;
  if ((code = ensure_out_dir(out)) != SSQP_OK) return code;

  ssqp_run* run = nullptr;
  int rc = ssqp_run_new(problem.get(), variant.c_str(), seed, params, &run);
  if (rc != SSQP_OK) return report(rc, "");
  std::unique_ptr<ssqp_run, decltype(&ssqp_run_free)> guard(run, &ssqp_run_free);

  std::string path;
  if ((rc = write_single_run(run, out, path)) != SSQP_OK) return rc;

  const long N = ssqp_problem_samples(problem.get());
  const std::string n_str = N < 0 ? "unbounded" : std::to_string(N);
  std::printf("problem %s (n=%ld, m=%ld, N=%s)\n", ssqp_problem_name(problem.get()),
              ssqp_problem_dim(problem.get()), ssqp_problem_constraints(problem.get()),
              n_str.c_str());
  const long iters = ssqp_run_iterations(run);
  std::printf("run %s: %ld iterations, terminal %s\n", ssqp_run_id(run), iters,
              ssqp_run_terminal_reason(run));
  if (iters > 0) {
    ssqp_iter_row row;
    if (ssqp_run_row(run, iters - 1, &row) == SSQP_OK) {
      std::printf("final feasibility %.6g stationarity %.6g tau_bar %.6g alpha %.6g batch %ld\n",
                  row.feasibility, row.stationarity, row.tau_bar, row.alpha, row.batch);
      std::printf("counters grad_evals %ld ls_iters %ld\n", row.grad_evals_cum, row.ls_iters_cum);
    }
  }
  std::printf("wrote %s\n", path.c_str());

  if (std::string(ssqp_run_terminal_reason(run)) == "solver_error") {
    std::fprintf(stderr, "error: solver failed: %s\n", ssqp_run_error_message(run));
    return SSQP_ERR_NUMERICAL;
  }
  return 0;
}

int run_bench(const ProblemFlags& pf, const std::map<std::string, std::string>& param_values,
              std::vector<std::string> problems, const std::vector<std::string>& variants,
              const std::vector<std::uint64_t>& seeds, const std::string& out, bool list_only) {
  if (list_only) {
    for (int i = 0; i < ssqp_suite_count(); ++i) std::printf("%s\n", ssqp_suite_name(i));
    return 0;
  }
  int code = SSQP_OK;
  ParamsHandle ph;
  ssqp_params* params = build_params(param_values, ph, code);
  if (params == nullptr) return code;
  if ((code = ensure_out_dir(out)) != SSQP_OK) return code;

  // Problem set: one logistic dataset, or named suite problems (default all).
  std::vector<ProblemHandle> handles;
  if (!pf.libsvm.empty()) {
    if (!problems.empty()) {
      std::fprintf(stderr, "error: --libsvm and --problems are mutually exclusive\n");
      return SSQP_ERR_USAGE;
    }
    ProblemFlags single = pf;
    ProblemHandle p = make_problem(single, code);
    if (!p) return code;
    handles.push_back(std::move(p));
  } else {
    if (problems.empty()) {
      for (int i = 0; i < ssqp_suite_count(); ++i) problems.emplace_back(ssqp_suite_name(i));
    }
    for (const std::string& name : problems) {
      ProblemFlags single = pf;
      single.synthetic = name;
      ProblemHandle p = make_problem(single, code);
      if (!p) return code;
      handles.push_back(std::move(p));
    }
  }

  struct Task {
    const ssqp_problem* problem;
    const std::string* variant;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const ProblemHandle& p : handles) {
    for (const std::string& v : variants) {
      for (std::uint64_t s : seeds) tasks.push_back({p.get(), &v, s});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> exit_code{0};
  std::mutex io;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      ssqp_run* run = nullptr;
      int rc = ssqp_run_new(t.problem, t.variant->c_str(), t.seed, params, &run);
      if (rc != SSQP_OK) {
        std::lock_guard<std::mutex> lock(io);
        std::fprintf(stderr, "error: %s (%s %s seed %" PRIu64 ")\n", ssqp_last_error(),
                     ssqp_problem_name(t.problem), t.variant->c_str(), t.seed);
        int want = 0;
        exit_code.compare_exchange_strong(want, rc);
        continue;
      }
      std::string path;
      rc = write_single_run(run, out, path);
      if (rc == SSQP_OK) {
        std::lock_guard<std::mutex> lock(io);
        std::printf("wrote %s (%ld iterations, %s)\n", path.c_str(), ssqp_run_iterations(run),
                    ssqp_run_terminal_reason(run));
        if (std::string(ssqp_run_terminal_reason(run)) == "solver_error") {
          std::fprintf(stderr, "warning: %s recorded solver failure: %s\n", ssqp_run_id(run),
                       ssqp_run_error_message(run));
        }
      } else {
        int want = 0;
        exit_code.compare_exchange_strong(want, rc);
      }
      ssqp_run_free(run);
    }
  };

  std::vector<std::thread> pool;
  const unsigned workers = worker_count(tasks.size());
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  return exit_code.load();
}

int run_profile(std::vector<std::string> files, const std::string& runs_dir,
                const std::vector<double>& eps_values, const std::string& out) {
  if (files.empty()) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(runs_dir, ec)) {
      if (!entry.is_regular_file()) continue;
      const std::string base = entry.path().filename().string();
      if (entry.path().extension() == ".csv" && base.rfind("profile-", 0) != 0) {
        files.push_back(entry.path().string());
      }
    }
    if (ec) {
      std::fprintf(stderr, "error: cannot read %s: %s\n", runs_dir.c_str(),
                   ec.message().c_str());
      return SSQP_ERR_DATA;
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) {
    std::fprintf(stderr, "error: no run CSVs found (pass files or --runs DIR)\n");
    return SSQP_ERR_USAGE;
  }
  int code = ensure_out_dir(out);
  if (code != SSQP_OK) return code;

  ssqp_runs* rs = ssqp_runs_create();
  std::unique_ptr<ssqp_runs, decltype(&ssqp_runs_free)> guard(rs, &ssqp_runs_free);
  for (const std::string& f : files) {
    if (ssqp_runs_load(rs, f.c_str()) != SSQP_OK) return report(SSQP_ERR_DATA, "(" + f + ")");
  }
  std::printf("loaded %ld runs from %zu files\n", ssqp_runs_count(rs), files.size());

  for (double eps : eps_values) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%g", eps);
    const std::string path = out + "/profile-" + tag + ".csv";
    const int rc = ssqp_profile(rs, &eps, 1, path.c_str());
    if (rc != SSQP_OK) return report(rc, "(" + path + ")");
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

// Flat key=value config support. CLI11's own config hooks only bind at the
// root app, so file entries are validated against the subcommand's options
// and expanded into --key=value tokens inserted ahead of the user's flags;
// explicit flags therefore win.
int expand_config_tokens(std::vector<std::string>& tokens,
                         const std::map<std::string, CLI::App*>& subcommands) {
  if (tokens.empty()) return SSQP_OK;
  const auto found = subcommands.find(tokens.front());
  if (found == subcommands.end()) return SSQP_OK;
  CLI::App* cmd = found->second;

  std::string path;
  bool seen = false;
  std::set<std::string> given;  // long flags the user passed explicitly
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].rfind("--", 0) != 0) continue;
    std::string name = tokens[i].substr(2);
    std::string inline_value;
    const std::size_t eq = name.find('=');
    const bool has_inline = eq != std::string::npos;
    if (has_inline) {
      inline_value = name.substr(eq + 1);
      name.resize(eq);
    }
    if (name != "config") {
      given.insert(name);
      continue;
    }
    if (seen) {
      std::fprintf(stderr, "error: --config given more than once\n");
      return SSQP_ERR_USAGE;
    }
    seen = true;
    if (has_inline) {
      path = inline_value;
    } else if (i + 1 < tokens.size()) {
      path = tokens[++i];
    } else {
      std::fprintf(stderr, "error: --config needs a file path\n");
      return SSQP_ERR_USAGE;
    }
  }
  if (!seen) return SSQP_OK;

  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot read config file %s\n", path.c_str());
    return SSQP_ERR_DATA;
  }
  std::vector<std::string> injected;
  std::set<std::string> file_keys;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string entry = CLI::detail::trim_copy(line);
    if (entry.empty() || entry[0] == '#') continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: %s line %ld: expected key=value\n", path.c_str(), lineno);
      return SSQP_ERR_USAGE;
    }
    const std::string key = CLI::detail::trim_copy(entry.substr(0, eq));
    const std::string value = CLI::detail::trim_copy(entry.substr(eq + 1));
    if (key == "config") {
      std::fprintf(stderr, "error: %s line %ld: config files cannot nest\n", path.c_str(),
                   lineno);
      return SSQP_ERR_USAGE;
    }
    if (cmd->get_option_no_throw("--" + key) == nullptr) {
      std::fprintf(stderr, "error: %s line %ld: unknown config key '%s'\n", path.c_str(),
                   lineno, key.c_str());
      return SSQP_ERR_USAGE;
    }
    if (!file_keys.insert(key).second) {
      std::fprintf(stderr, "error: %s line %ld: duplicate config key '%s'\n", path.c_str(),
                   lineno, key.c_str());
      return SSQP_ERR_USAGE;
    }
    if (given.count(key) != 0) continue;  // explicit flag wins
    injected.push_back("--" + key + "=" + value);
  }
  tokens.insert(tokens.begin() + 1, injected.begin(), injected.end());
  return SSQP_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic SQP solver for equality-constrained problems"};
  app.require_subcommand(1);

  // --- solve ---
  auto* solve = app.add_subcommand("solve", "run one problem with one solver variant");
  std::string solve_config;
  solve->add_option("--config", solve_config, "flat key=value config file (flags win)");
  ProblemFlags solve_pf;
  add_problem_flags(solve, solve_pf, true);
  std::map<std::string, std::string> solve_params;
  add_param_flags(solve, solve_params);
  std::string solve_variant = "inexact-adaptive";
  std::uint64_t solve_seed = 1;
  std::string solve_out = "out";
  solve->add_option("--variant", solve_variant,
                    "solver variant: {exact|inexact}-{fixed<k>|fixedN|adaptive|predetermined}")
      ->capture_default_str();
  solve->add_option("--seed", solve_seed, "run seed")->capture_default_str();
  solve->add_option("--out", solve_out, "output directory")->capture_default_str();

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "run a problems x variants x seeds grid");
  std::string bench_config;
  bench->add_option("--config", bench_config, "flat key=value config file (flags win)");
  ProblemFlags bench_pf;
  add_problem_flags(bench, bench_pf, false);
  std::map<std::string, std::string> bench_params;
  add_param_flags(bench, bench_params);
  std::vector<std::string> bench_problems;
  std::vector<std::string> bench_variants = {"exact-fixed2",   "exact-fixed128",   "exact-fixedN",
                                             "inexact-fixed2", "inexact-fixed128", "inexact-fixedN",
                                             "inexact-adaptive"};
  std::vector<std::uint64_t> bench_seeds = {1};
  std::string bench_out = "out";
  bool bench_list = false;
  bench->add_option("--problems", bench_problems, "suite problem names (default: all)")
      ->delimiter(',');
  bench->add_option("--variants", bench_variants, "solver variants")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--seeds", bench_seeds, "run seeds")->delimiter(',')->capture_default_str();
  bench->add_option("--out", bench_out, "output directory (one CSV per run)")
      ->capture_default_str();
  bench->add_flag("--list", bench_list, "print the suite problem names and exit");

  // --- profile ---
  auto* profile = app.add_subcommand("profile", "build performance profiles from run CSVs");
  std::vector<std::string> profile_files;
  std::string profile_runs_dir = "out";
  std::vector<double> profile_eps = {0.1};
  std::string profile_out = "out";
  profile->add_option("files", profile_files, "run CSV files (default: --runs directory)");
  profile->add_option("--runs", profile_runs_dir, "directory scanned for run CSVs")
      ->capture_default_str();
  profile->add_option("--eps-pp,--eps_pp", profile_eps, "accuracy levels, one profile CSV each")
      ->delimiter(',')
      ->capture_default_str();
  profile->add_option("--out", profile_out, "output directory")->capture_default_str();

  if (argc > 0) app.name(argv[0]);
  std::vector<std::string> args(argv + 1, argv + argc);
  {
    const int code = expand_config_tokens(args, {{"solve", solve}, {"bench", bench}});
    if (code != SSQP_OK) return code;
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes tokens from the back
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return SSQP_ERR_USAGE;
  }

  if (solve->parsed()) {
    return run_solve(solve_pf, solve_params, solve_variant, solve_seed, solve_out);
  }
  if (bench->parsed()) {
    return run_bench(bench_pf, bench_params, bench_problems, bench_variants, bench_seeds,
                     bench_out, bench_list);
  }
  return run_profile(profile_files, profile_runs_dir, profile_eps, profile_out);
}
