#include "rdsopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace rdsopt {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "'" + key + "': " + why);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    bad(key, "cannot parse '" + text + "' as a number");
  return v;
}

template <typename T>
std::vector<T> numbers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(number<T>(key, item));
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void set_override(SolverOverrides& o, const std::string& key, const std::string& param,
                  double v) {
  if (param == "gamma") o.gamma = v;
  else if (param == "gamma1") o.gamma1 = v;
  else if (param == "gamma2") o.gamma2 = v;
  else if (param == "alpha0") o.alpha0 = v;
  else if (param == "alpha_eps") o.alpha_eps = v;
  else if (param == "mu") o.mu = v;
  else if (param == "dense.gamma") o.dense_gamma = v;
  else if (param == "dense.gamma1") o.dense_gamma1 = v;
  else if (param == "dense.gamma2") o.dense_gamma2 = v;
  else bad(key, "unknown solver parameter '" + param + "'");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& raw_key,
                      const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "problems") {
    cfg.problems = split_list(value);
  } else if (key == "dims") {
    cfg.dims = numbers<Index>(key, value);
  } else if (key == "seeds") {
    cfg.seeds = numbers<std::uint64_t>(key, value);
  } else if (key == "solvers") {
    cfg.solvers = split_list(value);
  } else if (key == "budget_mult" || key == "budget-mult") {
    cfg.budget_multiplier = number<long>(key, value);
  } else if (key == "tau") {
    cfg.taus = numbers<double>(key, value);
  } else if (key == "out") {
    cfg.out_dir = trim(value);
  } else if (key == "threads") {
    cfg.threads = number<int>(key, value);
  } else if (const auto dot = key.find('.'); dot != std::string::npos) {
    const std::string solver = key.substr(0, dot);
    if (!contains(solver_names(), solver)) bad(key, "unknown solver '" + solver + "'");
    set_override(cfg.overrides[solver], key, key.substr(dot + 1), number<double>(key, value));
    try {
      validate_named_solver(solver, cfg.overrides[solver]);
    } catch (const Error& e) {
      bad(key, e.detail());
    }
  } else {
    bad(key, "unknown configuration key");
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig,
                  path + ":" + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void ExperimentConfig::validate() const {
  if (problems.empty()) bad("problems", "empty list");
  if (dims.empty()) bad("dims", "empty list");
  if (seeds.empty()) bad("seeds", "empty list");
  if (solvers.empty()) bad("solvers", "empty list");
  if (taus.empty()) bad("tau", "empty list");
  for (const auto& p : problems)
    if (!contains(problem_names(), p))
      throw Error(ErrorCode::UnknownProblem, "'problems': unknown problem '" + p + "'");
  for (const auto& s : solvers)
    if (!contains(solver_names(), s)) bad("solvers", "unknown solver '" + s + "'");
  for (Index d : dims)
    if (d < kMinProblemDim || d > kMaxProblemDim)
      throw Error(ErrorCode::InvalidDimension,
                  "'dims': n_p = " + std::to_string(d) + " outside [" +
                      std::to_string(kMinProblemDim) + ", " + std::to_string(kMaxProblemDim) + "]");
  if (budget_multiplier < 1) bad("budget_mult", "must be >= 1");
  for (double t : taus)
    if (!(t > 0.0 && t < 1.0)) bad("tau", "values must lie in (0,1)");
  if (threads < 0) bad("threads", "must be >= 0");
  for (const auto& [solver, o] : overrides) {
    if (!contains(solver_names(), solver)) bad(solver, "unknown solver '" + solver + "'");
    try {
      validate_named_solver(solver, o);
    } catch (const Error& e) {
      bad(solver, e.detail());
    }
  }
  if (contains(solvers, "zo-rgd"))
    for (const auto& p : problems)
      if (contains(nonsmooth_problem_names(), p))
        bad("solvers", "zo-rgd needs smooth problems, but '" + p + "' is nonsmooth");
}

std::uint64_t run_seed(const std::string& problem, Index n_p, std::uint64_t seed,
                       const std::string& solver) {
  return stable_hash(problem + "|" + std::to_string(n_p) + "|" + std::to_string(seed) + "|" +
                     solver);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ObserverFactory& observe) {
  cfg.validate();
  ExperimentResult res;
  std::vector<ProblemHandle> handles;
  for (const auto& name : cfg.problems)
    for (Index n_p : cfg.dims)
      for (std::uint64_t seed : cfg.seeds) {
        handles.push_back(build_instance(name, n_p, seed));
        const Manifold& m = *handles.back()->manifold();
        res.instances.push_back(InstanceInfo{name, n_p, seed, m.describe(), m.ambient_dim()});
      }

  const std::size_t per = cfg.solvers.size();
  res.runs.resize(handles.size() * per);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= res.runs.size()) return;
      try {
        const ProblemHandle& p = handles[cell / per];
        const std::string& solver = cfg.solvers[cell % per];
        const auto it = cfg.overrides.find(solver);
        const SolverOverrides o = it == cfg.overrides.end() ? SolverOverrides{} : it->second;
        const long budget = cfg.budget_multiplier * (p->n_p() + 1);
        const RunObserver obs = observe ? observe(p, solver) : RunObserver{};
        RunTrace t = run_named_solver(solver, p, budget,
                                      run_seed(p->name(), p->n_p(), p->seed(), solver), o, obs);
        res.runs[cell] = RunRecord{p->name(), p->n_p(),      p->seed(),   solver,
                                   t.f0,      std::move(t.history), t.evals_used};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                               : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, res.runs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  res.table = build_result_table(res.runs, cfg.taus);
  return res;
}

void write_experiment(const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / "traces").string() + ": " + ec.message());

  auto open = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "results.csv");
    write_result_table(f, result.table);
  }
  {
    auto f = open(dir / "instances.csv");
    f << "problem,n_p,seed,manifold,ambient_dim,shape_schedule\n";
    for (const auto& i : result.instances)
      f << i.problem << ',' << i.n_p << ',' << i.seed << ',' << csv_quote(i.manifold) << ','
        << i.ambient_dim << ',' << kShapeScheduleVersion << '\n';
  }
  for (const auto& r : result.runs) {
    auto f = open(dir / "traces" /
                  (r.problem + "_" + std::to_string(r.n_p) + "_" + std::to_string(r.seed) + "_" +
                   r.solver + ".csv"));
    write_trace(f, r.history);
  }
}

}  // namespace rdsopt
