#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "rdsopt/bench.hpp"
#include "rdsopt/checks.hpp"
#include "rdsopt/experiment.hpp"

namespace fs = std::filesystem;
using namespace rdsopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitCheckFailed = 2;

struct RunArgs {
  std::string config;
  std::string problems, dims, seeds, solvers, tau, out;
  long budget_mult = 0;
  int threads = -1;
  std::vector<std::string> sets;
};

struct ProfileArgs {
  std::string in;
  std::string out = "profiles";
  std::string kind = "both";
  std::string tau = "0.1,0.001";
  std::string bucket = "all";
  long budget_mult = 100;
  bool svg = false;
};

struct CheckArgs {
  std::uint64_t seed = 0;
  std::string suites = "geometry,spanning,solvers,problems,bench";
  bool inject_fault = false;
};

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& res) {
  for (const auto& solver : cfg.solvers) {
    long runs = 0;
    double evals = 0.0;
    for (const auto& r : res.runs)
      if (r.solver == solver) {
        ++runs;
        evals += static_cast<double>(r.evals_used);
      }
    std::cout << solver << ": " << runs << " runs, mean evals " << evals / static_cast<double>(runs);
    for (double tau : cfg.taus) {
      long solved = 0;
      for (const auto& row : res.table.rows)
        if (row.solver == solver && row.tau == tau && row.t_ps) ++solved;
      std::cout << ", solved " << solved << "/" << runs << " at tau=" << format_double(tau);
    }
    std::cout << '\n';
  }
}

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg;
  cfg.problems = smooth_problem_names();
  cfg.dims = {2, 10, 50};
  cfg.solvers = {"rds-sb", "rdse-sb"};
  if (!a.config.empty()) load_config_file(cfg, a.config);
  const std::pair<const char*, const std::string*> flags[] = {
      {"problems", &a.problems}, {"dims", &a.dims}, {"seeds", &a.seeds},
      {"solvers", &a.solvers},   {"tau", &a.tau},   {"out", &a.out}};
  for (const auto& [key, value] : flags)
    if (!value->empty()) set_config_value(cfg, key, *value);
  if (a.budget_mult != 0) cfg.budget_multiplier = a.budget_mult;
  if (a.threads >= 0) cfg.threads = a.threads;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "'--set " + kv + "': expected key=value");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  const ExperimentResult res = run_experiment(cfg);
  write_experiment(res, cfg.out_dir);
  print_summary(cfg, res);
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "results.csv").string() << '\n';
  return kExitOk;
}

int cmd_profile(const ProfileArgs& a) {
  std::ifstream in(a.in);
  if (!in) throw Error(ErrorCode::Io, "cannot open result table " + a.in);
  const ResultTable table = filter_bucket(read_result_table(in), parse_bucket(a.bucket));
  if (a.kind != "performance" && a.kind != "data" && a.kind != "both")
    throw Error(ErrorCode::InvalidConfig, "'--kind': expected performance, data or both");
  if (a.budget_mult < 1) throw Error(ErrorCode::InvalidConfig, "'--budget-mult': must be >= 1");

  std::vector<double> taus;
  ExperimentConfig scratch;
  set_config_value(scratch, "tau", a.tau);
  taus = scratch.taus;

  fs::create_directories(a.out);
  for (double tau : taus) {
    std::vector<std::vector<ProfileCurve>> sets;
    if (a.kind != "data") sets.push_back(performance_profile(table, tau));
    if (a.kind != "performance")
      sets.push_back(data_profile(table, tau, static_cast<double>(a.budget_mult)));
    for (const auto& curves : sets) {
      const std::string stem =
          std::string(to_string(curves.front().kind)) + "_tau" + format_double(tau);
      for (const auto& c : curves) {
        const fs::path path = fs::path(a.out) / (stem + "_" + c.solver + ".csv");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
        write_profiles(f, {c});
      }
      if (a.svg) {
        const fs::path path = fs::path(a.out) / (stem + ".svg");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
        f << render_profiles_svg(curves, std::string(to_string(curves.front().kind)) +
                                             " profile, tau = " + format_double(tau));
      }
      std::cout << stem << ": " << curves.size() << " curves\n";
    }
  }
  return kExitOk;
}

int cmd_check(const CheckArgs& a) {
  CheckOptions opt;
  opt.seed = a.seed;
  opt.inject_faulty_retraction = a.inject_fault;
  const std::map<std::string, std::vector<CheckResult> (*)(const CheckOptions&)> suites{
      {"geometry", &check_geometry}, {"spanning", &check_spanning}, {"solvers", &check_solvers},
      {"problems", &check_problems}, {"bench", &check_bench}};
  std::vector<CheckResult> results;
  for (const auto& name : split_list(a.suites)) {
    const auto it = suites.find(name);
    if (it == suites.end())
      throw Error(ErrorCode::InvalidConfig, "'--suite': unknown suite '" + name + "'");
    auto part = it->second(opt);
    results.insert(results.end(), part.begin(), part.end());
  }
  print_report(std::cout, results);
  return all_passed(results) ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derivative-free direct search on Riemannian manifolds"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a solver x problem grid and write CSV results");
  run_cmd->add_option("--config", run.config, "Key-value configuration file");
  run_cmd->add_option("--problems", run.problems, "Comma-separated problem names");
  run_cmd->add_option("--dims", run.dims, "Comma-separated problem dimensions n_p");
  run_cmd->add_option("--seeds", run.seeds, "Comma-separated instance seeds");
  run_cmd->add_option("--solvers", run.solvers, "Comma-separated solver names");
  run_cmd->add_option("--budget-mult", run.budget_mult, "Budget = mult * (n_p + 1)");
  run_cmd->add_option("--tau", run.tau, "Comma-separated convergence tolerances");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0: all cores)");
  run_cmd->add_option("--set", run.sets, "Extra key=value setting, e.g. rds-sb.gamma=0.5");

  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "Compute data/performance profiles");
  prof_cmd->add_option("--in", prof.in, "Result table CSV")->required();
  prof_cmd->add_option("--out", prof.out, "Output directory")->capture_default_str();
  prof_cmd->add_option("--kind", prof.kind, "performance, data or both")->capture_default_str();
  prof_cmd->add_option("--tau", prof.tau, "Comma-separated tolerances")->capture_default_str();
  prof_cmd->add_option("--bucket", prof.bucket, "all, small, medium or large")->capture_default_str();
  prof_cmd->add_option("--budget-mult", prof.budget_mult, "Right edge of data profiles")->capture_default_str();
  prof_cmd->add_flag("--svg", prof.svg, "Also write SVG plots");

  CheckArgs chk;
  auto* chk_cmd = app.add_subcommand("check", "Run the invariant suites");
  chk_cmd->add_option("--seed", chk.seed, "Base seed")->capture_default_str();
  chk_cmd->add_option("--suite", chk.suites, "Comma-separated suites")->capture_default_str();
  chk_cmd->add_flag("--inject-fault", chk.inject_fault, "Use a faulty sphere retraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*prof_cmd) return cmd_profile(prof);
    if (*chk_cmd) return cmd_check(chk);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}
